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
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "emtopk/aurs.hpp"

using namespace emtopk;

namespace {

// Memory-backed source answering rank probes within a configurable window
// [rho, window*rho); `mode` picks where in the window the answer lands,
// so adversarial extremes get exercised.
struct VecSource final : RankedSource {
    std::vector<Key> desc; // sorted descending
    double window = 2.0;
    int mode = 0; // 0: lowest admissible rank, 1: highest, 2: pseudo-random
    std::uint64_t salt = 0;

    std::size_t size() override { return desc.size(); }
    Key maxElement() override { return desc.front(); }

    Key rankSelect(double rho) override {
        std::size_t lo = std::size_t(std::ceil(rho));
        if (lo < 1) lo = 1;
        std::size_t hi = std::size_t(std::ceil(window * rho)) - 1;
        if (desc.size() < lo) return kNegInfKey;
        hi = std::min(hi, desc.size());
        std::size_t r;
        switch (mode) {
            case 0: r = lo; break;
            case 1: r = hi; break;
            default: r = lo + (salt += 0x9E3779B97F4A7C15ULL) % (hi - lo + 1);
        }
        return desc[r - 1];
    }
};

std::size_t unionRank(const std::vector<VecSource>& srcs, Key val) {
    std::size_t r = 0;
    for (auto& s : srcs)
        for (Key k : s.desc)
            if (k >= val) ++r;
    return r;
}

std::vector<VecSource> makeSources(std::mt19937_64& rng, std::size_t m,
                                   std::size_t minSize, std::size_t maxSize,
                                   double window, int mode) {
    std::set<Key> used;
    std::vector<VecSource> srcs(m);
    for (auto& s : srcs) {
        std::size_t n = minSize + rng() % (maxSize - minSize + 1);
        while (s.desc.size() < n) {
            Key k = 1 + rng() % (1u << 20);
            if (used.insert(k).second) s.desc.push_back(k);
        }
        std::sort(s.desc.rbegin(), s.desc.rend());
        s.window = window;
        s.mode = mode;
        s.salt = rng();
    }
    return srcs;
}

} // namespace

TEST_CASE("weighted selection picks the largest pivot reaching weight k") {
    std::vector<Marker> pivots = {
        {100, 3, 0, 1}, {90, 2, 1, 1}, {80, 10, 0, 2}, {70, 1, 1, 2}};
    CHECK(weightedSelect(pivots, 1).value == 100);
    CHECK(weightedSelect(pivots, 3).value == 100);
    CHECK(weightedSelect(pivots, 4).value == 90);
    CHECK(weightedSelect(pivots, 5).value == 90);
    CHECK(weightedSelect(pivots, 6).value == 80);
    CHECK(weightedSelect(pivots, 15).value == 80);
    CHECK(weightedSelect(pivots, 16).value == 70);
}

TEST_CASE("ratio bound helper") {
    CHECK(aursRatioBound(2) == doctest::Approx(24));      // window defaults to c1
    CHECK(aursRatioBound(2, 2) == doctest::Approx(24));
    CHECK(aursRatioBound(2, 8) == doctest::Approx(96));   // wider source windows
    CHECK(aursRatioBound(3) == doctest::Approx(3 * 3 * 8));
}

TEST_CASE("preconditions throw instead of clamping") {
    std::mt19937_64 rng(3);
    auto srcs = makeSources(rng, 2, 8, 8, 2.0, 0);
    std::vector<RankedSource*> ptrs{&srcs[0], &srcs[1]};
    CHECK_THROWS(aursSelect(ptrs, 2, 1.5)); // c1 < 2
    CHECK_THROWS(aursSelect(ptrs, 5, 2.0)); // k > min|L_i| / c1 = 4
    CHECK_THROWS(aursSelect(ptrs, 0, 2.0));
    CHECK_NOTHROW(aursSelect(ptrs, 4, 2.0));
}

TEST_CASE("exhaustive window check: c1 = 2, m <= 6, |L_i| <= 64") {
    std::mt19937_64 rng(29);
    const double c1 = 2.0;
    for (std::size_t m = 1; m <= 6; ++m) {
        for (int mode : {0, 1, 2}) {
            for (int rep = 0; rep < 12; ++rep) {
                auto srcs = makeSources(rng, m, 4, 64, c1, mode);
                std::size_t minSz = 64;
                for (auto& s : srcs) minSz = std::min(minSz, s.desc.size());
                std::vector<RankedSource*> ptrs;
                for (auto& s : srcs) ptrs.push_back(&s);
                std::size_t kMax = std::size_t(double(minSz) / c1);
                for (std::size_t k = 1; k <= kMax; ++k) { // every admissible k
                    AursStats stats;
                    Key got = aursSelect(ptrs, k, c1, &stats);
                    REQUIRE(got != kNegInfKey);
                    std::size_t r = unionRank(srcs, got);
                    CHECK(r >= k);
                    CHECK(double(r) <= aursRatioBound(c1, c1) * double(k));
                    CHECK(stats.maxCalls <= m);
                }
            }
        }
    }
}

TEST_CASE("wider source windows keep the lower bound and scale the upper") {
    std::mt19937_64 rng(31);
    const double c1 = 2.0, window = 8.0; // sources answer in [rho, 8 rho)
    for (int trial = 0; trial < 150; ++trial) {
        std::size_t m = 1 + rng() % 6;
        auto srcs = makeSources(rng, m, 8, 64, window, int(rng() % 3));
        std::size_t minSz = 64;
        for (auto& s : srcs) minSz = std::min(minSz, s.desc.size());
        std::vector<RankedSource*> ptrs;
        for (auto& s : srcs) ptrs.push_back(&s);
        for (std::size_t k = 1; k <= std::size_t(double(minSz) / c1); ++k) {
            Key got = aursSelect(ptrs, k, c1);
            REQUIRE(got != kNegInfKey);
            std::size_t r = unionRank(srcs, got);
            CHECK(r >= k);
            CHECK(double(r) <= aursRatioBound(c1, window) * double(k));
        }
    }
}
