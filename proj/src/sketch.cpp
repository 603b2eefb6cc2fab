// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emtopk/sketch.hpp"

#include <algorithm>
#include <stdexcept>

#include "emtopk/bits.hpp"

namespace emtopk {

std::size_t pivotHomeRank(std::size_t j, std::size_t setSize) {
    std::size_t lo = std::size_t{1} << (j - 1);
    std::size_t hi = (std::size_t{1} << j) - 1;
    std::size_t r = lo + lo / 2; // floor(3/2 * 2^(j-1))
    r = std::clamp(r, lo, hi);
    return std::min(r, setSize);
}

Sketch buildSketch(std::span<const Key> sortedDesc) {
    Sketch s;
    std::size_t n = sortedDesc.size();
    for (std::size_t j = 1; j <= sketchLength(n); ++j)
        s.pivots.push_back(sortedDesc[pivotHomeRank(j, n) - 1]);
    return s;
}

bool sketchWindowsValid(const Sketch& s, std::span<const Key> sortedDesc) {
    std::size_t n = sortedDesc.size();
    if (s.pivots.size() != sketchLength(n)) return false;
    for (std::size_t j = 1; j <= s.pivots.size(); ++j) {
        Key v = s.pivots[j - 1];
        auto it = std::find(sortedDesc.begin(), sortedDesc.end(), v);
        if (it == sortedDesc.end()) return false;
        std::size_t rank = static_cast<std::size_t>(it - sortedDesc.begin()) + 1;
        if (rank < (std::size_t{1} << (j - 1)) || rank >= (std::size_t{1} << j))
            return false;
    }
    return true;
}

namespace {

// Shared selection core in "value code" space (larger code = larger value).
// pivotCodes[i] is strictly decreasing. Returns (set, entry) of the winner.
std::optional<std::pair<std::size_t, std::size_t>>
unionSelectCore(const std::vector<std::vector<std::uint64_t>>& pivotCodes, double k) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    std::uint64_t bestCode = 0;
    for (std::size_t ci = 0; ci < pivotCodes.size(); ++ci) {
        for (std::size_t cj = 0; cj < pivotCodes[ci].size(); ++cj) {
            std::uint64_t x = pivotCodes[ci][cj];
            // certified lower bound on the union rank of x
            double lb = 0;
            for (const auto& arr : pivotCodes) {
                std::size_t ji = 0;
                while (ji < arr.size() && arr[ji] >= x) ++ji;
                if (ji > 0) lb += static_cast<double>(std::size_t{1} << (ji - 1));
            }
            if (lb >= k && (!best || x > bestCode)) {
                best = {ci, cj};
                bestCode = x;
            }
        }
    }
    return best;
}

} // namespace

Key sketchUnionSelect(std::span<const Sketch> sketches, double k) {
    if (k < 1) throw std::invalid_argument("sketchUnionSelect: k must be >= 1");
    std::vector<std::vector<std::uint64_t>> codes;
    for (const auto& s : sketches) codes.emplace_back(s.pivots.begin(), s.pivots.end());
    auto w = unionSelectCore(codes, k);
    if (!w) return kNegInfKey;
    return sketches[w->first].pivots[w->second];
}

std::optional<std::uint32_t> compressedUnionSelect(const CompressedSketchSet& css,
                                                   std::size_t i1, std::size_t i2,
                                                   double k) {
    if (k < 1) throw std::invalid_argument("compressedUnionSelect: k must be >= 1");
    // global ranks order values: smaller rank = larger value
    std::vector<std::vector<std::uint64_t>> codes;
    for (std::size_t i = i1; i <= i2; ++i) {
        std::vector<std::uint64_t> arr;
        for (const auto& p : css.sets[i])
            arr.push_back(~static_cast<std::uint64_t>(p.globalRank));
        codes.push_back(std::move(arr));
    }
    auto w = unionSelectCore(codes, k);
    if (!w) return std::nullopt;
    return css.sets[i1 + w->first][w->second].globalRank;
}

CompressedSketchSet CompressedSketchSet::empty(std::size_t f, std::size_t l) {
    CompressedSketchSet c;
    c.f = f;
    c.l = l;
    c.sizes.assign(f, 0);
    c.sets.assign(f, {});
    return c;
}

namespace {

struct SketchFieldBits {
    unsigned size;   // per-set size field
    unsigned global; // global rank
    unsigned local;  // local rank
};

SketchFieldBits fieldBits(std::size_t f, std::size_t l) {
    return SketchFieldBits{
        ceilLog2(l + 1),
        ceilLog2(std::max<std::size_t>(2, f * l)),
        ceilLog2(std::max<std::size_t>(2, l)),
    };
}

} // namespace

std::size_t CompressedSketchSet::packedBits() const {
    auto fb = fieldBits(f, l);
    std::size_t bits = 0;
    for (std::size_t i = 0; i < f; ++i)
        bits += fb.size + sets[i].size() * (fb.global + fb.local);
    return bits;
}

std::size_t CompressedSketchSet::worstCaseBits(std::size_t f, std::size_t l) {
    auto fb = fieldBits(f, l);
    return f * (fb.size + sketchLength(l) * (fb.global + fb.local));
}

std::size_t CompressedSketchSet::budgetFormulaBits(std::size_t f, std::size_t l) {
    return f * sketchLength(l) * 2 * ceilLog2(std::max<std::size_t>(2, f * l));
}

std::vector<Word> CompressedSketchSet::pack() const {
    auto fb = fieldBits(f, l);
    BitWriter w;
    for (std::size_t i = 0; i < f; ++i) {
        w.put(sizes[i], fb.size);
        assert(sets[i].size() == sketchLength(sizes[i]));
        for (const auto& p : sets[i]) {
            assert(p.globalRank >= 1 && p.localRank >= 1);
            w.put(p.globalRank - 1, fb.global);
            w.put(p.localRank - 1, fb.local);
        }
    }
    return w.words();
}

CompressedSketchSet CompressedSketchSet::unpack(std::span<const Word> words,
                                                std::size_t f, std::size_t l) {
    auto fb = fieldBits(f, l);
    CompressedSketchSet c = empty(f, l);
    BitReader r(words.data(), words.size() * 64);
    for (std::size_t i = 0; i < f; ++i) {
        c.sizes[i] = static_cast<std::uint32_t>(r.get(fb.size));
        std::size_t np = sketchLength(c.sizes[i]);
        for (std::size_t j = 0; j < np; ++j) {
            PivotRanks p;
            p.globalRank = static_cast<std::uint32_t>(r.get(fb.global)) + 1;
            p.localRank = static_cast<std::uint32_t>(r.get(fb.local)) + 1;
            c.sets[i].push_back(p);
        }
    }
    return c;
}

} // namespace emtopk
