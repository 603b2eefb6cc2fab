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
#include "emtopk/fl_group.hpp"

using namespace emtopk;

namespace {

std::size_t unionRank(const std::vector<std::set<Key>>& sets, std::size_t a1,
                      std::size_t a2, Key val) {
    std::size_t r = 0;
    for (std::size_t i = a1; i <= a2; ++i)
        for (Key k : sets[i - 1])
            if (k >= val) ++r;
    return r;
}

std::size_t unionSize(const std::vector<std::set<Key>>& sets, std::size_t a1,
                      std::size_t a2) {
    std::size_t n = 0;
    for (std::size_t i = a1; i <= a2; ++i) n += sets[i - 1].size();
    return n;
}

} // namespace

TEST_CASE("budget feasibility check matches construction") {
    EmConfig small{8, 64, 64};
    EmConfig big{64, 4096, 64};
    CHECK(!FlGroup::fitsBudget(8, 16, small));
    CHECK(FlGroup::fitsBudget(8, 16, big));
    {
        BlockStore s(big);
        CHECK_NOTHROW(FlGroup(s, FlParams{8, 16}));
    }
    {
        BlockStore s(small);
        CHECK_THROWS(FlGroup(s, FlParams{8, 16}));
    }
}

TEST_CASE("fuzz: windows, budgets and audits after every update") {
    std::mt19937_64 rng(41);
    struct Cfg {
        std::size_t B, f, l;
    };
    for (Cfg cfg : {Cfg{16, 4, 8}, Cfg{32, 8, 16}, Cfg{64, 16, 24}}) {
        EmConfig em{cfg.B, 64 * cfg.B, 64};
        BlockStore store(em);
        FlGroup g(store, FlParams{cfg.f, cfg.l});
        std::vector<std::set<Key>> sets(cfg.f);
        std::set<Key> used;
        std::string why;

        auto checkBudgets = [&] {
            CHECK(g.debugSketch().packedBits() <= em.blockBits());
            CHECK(g.debugPrefix().packedBits() <= em.blockBits());
        };

        auto checkQueries = [&] {
            std::size_t a1 = 1 + rng() % cfg.f;
            std::size_t a2 = a1 + rng() % (cfg.f - a1 + 1);
            std::size_t sz = unionSize(sets, a1, a2);

            auto mx = g.maxInRange(a1, a2);
            if (sz == 0) {
                CHECK(!mx.has_value());
            } else {
                Key want = kNegInfKey;
                for (std::size_t i = a1; i <= a2; ++i)
                    if (!sets[i - 1].empty())
                        want = std::max(want, *sets[i - 1].rbegin());
                REQUIRE(mx.has_value());
                CHECK(*mx == want);
            }

            for (std::size_t k = 1; k <= sz; ++k) {
                Key got = g.query(a1, a2, double(k));
                if (got == kNegInfKey) {
                    CHECK(sz < 2 * k);
                    continue;
                }
                std::size_t r = unionRank(sets, a1, a2, got);
                CHECK(r >= k);
                CHECK(r < kSketchRatio * k);
            }
            if (sz > 0) CHECK_THROWS(g.query(a1, a2, double(sz + 1)));
        };

        for (int op = 0; op < 1200; ++op) {
            std::size_t i = 1 + rng() % cfg.f;
            bool ins = sets[i - 1].empty() ||
                       (sets[i - 1].size() < cfg.l && rng() % 100 < 60);
            if (ins) {
                Key e;
                do e = 1 + rng() % (1u << 20);
                while (!used.insert(e).second);
                g.insert(i, e);
                sets[i - 1].insert(e);
            } else {
                auto it = sets[i - 1].begin();
                std::advance(it, rng() % sets[i - 1].size());
                g.erase(i, *it);
                used.erase(*it);
                sets[i - 1].erase(it);
            }
            CHECK(g.setSize(i) == sets[i - 1].size());
            checkBudgets();
            if (!g.auditConsistent(&why)) FAIL(why);
            if (op % 23 == 0) checkQueries();
        }
        checkQueries();
        CHECK(g.totalSize() == unionSize(sets, 1, cfg.f));

        // prefix lookups resolve to true global ranks
        std::vector<Key> uni;
        for (auto& s : sets) uni.insert(uni.end(), s.begin(), s.end());
        std::sort(uni.rbegin(), uni.rend());
        for (std::size_t i = 1; i <= cfg.f; ++i) {
            std::vector<Key> desc(sets[i - 1].rbegin(), sets[i - 1].rend());
            for (std::size_t r = 1; r <= g.prefixCapacity() + 1; ++r) {
                auto got = g.prefixLookup(i, r);
                if (r > std::min(desc.size(), g.prefixCapacity())) {
                    CHECK(!got.has_value());
                    continue;
                }
                REQUIRE(got.has_value());
                CHECK(uni[*got - 1] == desc[r - 1]);
            }
        }
    }
}

TEST_CASE("a query costs O(lg_B(fl)) I/Os, not a scan") {
    EmConfig em{32, 2048, 64};
    BlockStore store(em);
    FlGroup g(store, FlParams{8, 16});
    std::mt19937_64 rng(43);
    std::set<Key> used;
    for (std::size_t i = 1; i <= 8; ++i)
        for (std::size_t j = 0; j < 16; ++j) {
            Key e;
            do e = 1 + rng() % (1u << 20);
            while (!used.insert(e).second);
            g.insert(i, e);
        }
    store.statsReset();
    g.query(1, 8, 4.0);
    // one sketch-block read plus one global-index walk
    CHECK(store.statsSnapshot().reads <= 8);
    CHECK(store.statsSnapshot().writes == 0);
}
