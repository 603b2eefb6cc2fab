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
#include <map>
#include <random>

#include "doctest.h"
#include "emtopk/ost_tree.hpp"

using namespace emtopk;

TEST_CASE("order-statistic tree matches a map oracle under fuzz") {
    std::mt19937_64 rng(101);
    for (std::size_t fanout : {4u, 8u, 19u}) {
        BlockStore store(EmConfig{8, 64, 64});
        OstTree t(store, fanout);
        std::map<Key, std::uint64_t> oracle;

        auto checkQueries = [&] {
            std::vector<Key> sorted;
            for (auto& [k, _] : oracle) sorted.push_back(k);
            CHECK(t.size() == oracle.size());

            for (int q = 0; q < 20; ++q) {
                Key a = rng() % 2200, b = rng() % 2200;
                if (a > b) std::swap(a, b);
                auto lessIt = std::lower_bound(sorted.begin(), sorted.end(), a);
                CHECK(t.countLess(a) == std::size_t(lessIt - sorted.begin()));
                auto upIt = std::upper_bound(sorted.begin(), sorted.end(), b);
                std::size_t inRange = std::size_t(upIt - lessIt);
                CHECK(t.countInRange(a, b) == inRange);

                auto mx = t.maxAuxInRange(a, b);
                if (inRange == 0) {
                    CHECK(!mx.has_value());
                } else {
                    REQUIRE(mx.has_value());
                    Key hi = *(upIt - 1);
                    CHECK(mx->key == hi);
                    CHECK(mx->aux == oracle[hi]);
                }

                auto coll = t.collectRange(a, b);
                REQUIRE(coll.size() == inRange);
                for (std::size_t i = 0; i < inRange; ++i) {
                    CHECK(coll[i].key == *(lessIt + i));
                    CHECK(coll[i].aux == oracle[coll[i].key]);
                }
            }
            if (!oracle.empty()) {
                std::size_t r = 1 + rng() % oracle.size();
                CHECK(t.selectAsc(r).key == sorted[r - 1]);
                CHECK(t.selectDesc(r).key == sorted[sorted.size() - r]);
                Key probe = sorted[rng() % sorted.size()];
                // elements >= probe
                auto ge = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), probe);
                CHECK(t.rankDesc(probe) == std::size_t(ge));
            }
        };

        for (int op = 0; op < 1500; ++op) {
            Key k = 1 + rng() % 2000;
            if (oracle.empty() || rng() % 100 < 65) {
                bool fresh = !oracle.count(k);
                CHECK(t.insert(k, k * 3) == fresh);
                oracle[k] = k * 3;
            } else {
                bool present = oracle.count(k) > 0;
                CHECK(t.erase(k) == present);
                oracle.erase(k);
            }
            CHECK(t.contains(k) == (oracle.count(k) > 0));
            if (op % 100 == 0) checkQueries();
        }
        checkQueries();
        auto all = t.collectAll();
        CHECK(all.size() == oracle.size());
    }
}

TEST_CASE("tree operations are charged to the block store") {
    BlockStore store(EmConfig{8, 64, 64});
    OstTree t(store, 4);
    for (Key k = 1; k <= 200; ++k) t.insert(k * 7, k);
    store.statsReset();
    t.find(7 * 50);
    auto walk = store.statsSnapshot();
    CHECK(walk.reads >= t.height());
    CHECK(walk.writes == 0);
}
