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

#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "emtopk/sketch.hpp"

using namespace emtopk;

namespace {

std::vector<Key> randomDesc(std::mt19937_64& rng, std::size_t n, Key hi,
                            std::set<Key>& used) {
    std::vector<Key> v;
    while (v.size() < n) {
        Key k = 1 + rng() % hi;
        if (used.insert(k).second) v.push_back(k);
    }
    std::sort(v.rbegin(), v.rend());
    return v;
}

std::size_t unionRank(const std::vector<std::vector<Key>>& sets, Key val) {
    std::size_t r = 0;
    for (auto& s : sets)
        for (Key k : s)
            if (k >= val) ++r;
    return r;
}

} // namespace

TEST_CASE("sketch length and home ranks") {
    CHECK(sketchLength(0) == 0);
    CHECK(sketchLength(1) == 1);
    CHECK(sketchLength(2) == 2);
    CHECK(sketchLength(3) == 2);
    CHECK(sketchLength(4) == 3);
    CHECK(sketchLength(1023) == 10);
    CHECK(sketchLength(1024) == 11);

    for (std::size_t size : {1u, 2u, 3u, 9u, 100u, 4097u}) {
        std::size_t len = sketchLength(size);
        for (std::size_t j = 1; j <= len; ++j) {
            std::size_t home = pivotHomeRank(j, size);
            std::size_t lo = std::size_t{1} << (j - 1);
            CHECK(home >= lo);
            CHECK(home < 2 * lo);
            CHECK(home <= size);
        }
    }
}

TEST_CASE("built sketches have every pivot in its window") {
    std::mt19937_64 rng(9);
    for (std::size_t n : {1u, 2u, 5u, 31u, 32u, 33u, 500u}) {
        std::set<Key> used;
        auto desc = randomDesc(rng, n, 1u << 20, used);
        Sketch s = buildSketch(desc);
        CHECK(s.pivots.size() == sketchLength(n));
        CHECK(sketchWindowsValid(s, desc));
        CHECK(std::is_sorted(s.pivots.rbegin(), s.pivots.rend()));
        CHECK(s.pivots[0] == desc[0]); // entry 1 is the maximum
    }
    Sketch empty = buildSketch({});
    CHECK(empty.pivots.empty());
    CHECK(sketchWindowsValid(empty, {}));
}

TEST_CASE("union selection lands in [k, 8k)") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 400; ++trial) {
        std::size_t m = 1 + rng() % 6;
        std::vector<std::vector<Key>> sets;
        std::vector<Sketch> sketches;
        std::set<Key> used;
        std::size_t total = 0;
        for (std::size_t i = 0; i < m; ++i) {
            sets.push_back(randomDesc(rng, rng() % 64, 1u << 20, used));
            sketches.push_back(buildSketch(sets.back()));
            total += sets.back().size();
        }
        for (std::size_t k = 1; k <= total; ++k) {
            Key got = sketchUnionSelect(sketches, double(k));
            if (got == kNegInfKey) {
                CHECK(total < 2 * k); // -inf only on tiny unions
                continue;
            }
            std::size_t r = unionRank(sets, got);
            CHECK(r >= k);
            CHECK(r < kSketchRatio * k);
        }
    }
}

TEST_CASE("packed sketch-set bit arithmetic") {
    // f * (floor(lg l)+1) * 2 * ceil(lg(f*l)) with f=8, l=16: 8*5*2*7
    CHECK(CompressedSketchSet::budgetFormulaBits(8, 16) == 560);
    CHECK(CompressedSketchSet::budgetFormulaBits(4, 8) == 4 * 4 * 2 * 5);

    auto e = CompressedSketchSet::empty(8, 16);
    CHECK(e.packedBits() <= CompressedSketchSet::worstCaseBits(8, 16));
}

TEST_CASE("pack/unpack roundtrip and compressed selection window") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t f = 1 + rng() % 6, l = 1 + rng() % 48;
        std::vector<std::vector<Key>> sets;
        std::set<Key> used;
        for (std::size_t i = 0; i < f; ++i)
            sets.push_back(randomDesc(rng, rng() % (l + 1), 1u << 20, used));

        // global ranks over the union of all sets
        std::vector<Key> uni;
        for (auto& s : sets) uni.insert(uni.end(), s.begin(), s.end());
        std::sort(uni.rbegin(), uni.rend());
        auto globalRankOf = [&](Key v) {
            return std::uint32_t(
                std::lower_bound(uni.begin(), uni.end(), v, std::greater<Key>{}) -
                uni.begin() + 1);
        };

        CompressedSketchSet css = CompressedSketchSet::empty(f, l);
        for (std::size_t i = 0; i < f; ++i) {
            css.sizes[i] = std::uint32_t(sets[i].size());
            Sketch sk = buildSketch(sets[i]);
            css.sets[i].clear();
            for (Key piv : sk.pivots) {
                std::uint32_t local = std::uint32_t(
                    std::lower_bound(sets[i].begin(), sets[i].end(), piv,
                                     std::greater<Key>{}) -
                    sets[i].begin() + 1);
                css.sets[i].push_back({globalRankOf(piv), local});
            }
        }

        CHECK(css.packedBits() <= CompressedSketchSet::worstCaseBits(f, l));
        auto words = css.pack();
        CHECK(words.size() * 64 >= css.packedBits());
        CHECK(CompressedSketchSet::unpack(words, f, l) == css);

        // selection over a random contiguous run of sets
        std::size_t i1 = rng() % f, i2 = i1 + rng() % (f - i1);
        std::vector<std::vector<Key>> sub(sets.begin() + i1, sets.begin() + i2 + 1);
        std::size_t subTotal = 0;
        for (auto& s : sub) subTotal += s.size();
        for (std::size_t k = 1; k <= subTotal; ++k) {
            auto g = compressedUnionSelect(css, i1, i2, double(k));
            if (!g) {
                CHECK(subTotal < 2 * k);
                continue;
            }
            REQUIRE(*g >= 1);
            REQUIRE(*g <= uni.size());
            std::size_t r = unionRank(sub, uni[*g - 1]);
            CHECK(r >= k);
            CHECK(r < kSketchRatio * k);
        }
    }
}
