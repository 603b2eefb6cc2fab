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

#include "doctest.h"
#include "emtopk/heap_select.hpp"

using namespace emtopk;

namespace {

// A forest of binary max-heaps held in flat arrays; Ref addresses a slot.
struct Ref {
    Key key = 0;
    std::size_t heap = 0, slot = 0;
};

struct Forest {
    std::vector<std::vector<Key>> heaps;
    std::size_t expandCalls = 0;

    std::vector<Ref> roots() {
        std::vector<Ref> out;
        for (std::size_t h = 0; h < heaps.size(); ++h)
            if (!heaps[h].empty()) out.push_back({heaps[h][0], h, 0});
        return out;
    }

    std::vector<Ref> expand(const Ref& r) {
        ++expandCalls;
        std::vector<Ref> out;
        for (std::size_t c : {2 * r.slot + 1, 2 * r.slot + 2})
            if (c < heaps[r.heap].size()) out.push_back({heaps[r.heap][c], r.heap, c});
        return out;
    }

    std::vector<Key> allKeys() const {
        std::vector<Key> out;
        for (auto& h : heaps) out.insert(out.end(), h.begin(), h.end());
        return out;
    }
};

Forest makeForest(std::mt19937_64& rng, std::size_t heaps, std::size_t maxSize) {
    Forest f;
    std::size_t next = 1;
    for (std::size_t h = 0; h < heaps; ++h) {
        std::vector<Key> v(rng() % (maxSize + 1));
        for (auto& k : v) k = next += 1 + rng() % 5; // distinct keys
        std::shuffle(v.begin(), v.end(), rng);
        std::make_heap(v.begin(), v.end(), std::less<Key>{});
        // make_heap yields a valid array heap; keep it as-is
        f.heaps.push_back(std::move(v));
    }
    return f;
}

} // namespace

TEST_CASE("selects the t largest of the forest in order") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        Forest f = makeForest(rng, 1 + rng() % 8, rng() % 40);
        auto heap = concatHeaps(f.roots());
        auto all = f.allKeys();
        std::sort(all.rbegin(), all.rend());
        std::size_t t = rng() % (all.size() + 3);

        SelectStats stats;
        auto got = selectTop(heap, t, [&](const Ref& r) { return f.expand(r); },
                             &stats);
        REQUIRE(got.size() == std::min(t, all.size()));
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].key == all[i]);
        CHECK(stats.pops == got.size());
    }
}

TEST_CASE("node reads stay within 3t+1 even on adversarial shapes") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        // adversarial mixes: many tiny heaps, a few deep chains, ties in shape
        std::size_t heaps = 1 + rng() % 30;
        Forest f = makeForest(rng, heaps, trial % 3 == 0 ? 2 : 200);
        auto heap = concatHeaps(f.roots());
        std::size_t total = f.allKeys().size();
        for (std::size_t t : {std::size_t{1}, std::size_t{2}, std::size_t{7},
                              total, total + 5}) {
            f.expandCalls = 0;
            auto got = selectTop(heap, t, [&](const Ref& r) { return f.expand(r); });
            CHECK(got.size() == std::min(t, total));
            // each expansion is the read of one heap node
            CHECK(f.expandCalls <= 3 * t + 1);
        }
    }
}

TEST_CASE("empty forest") {
    Forest f;
    auto heap = concatHeaps(f.roots());
    auto got = selectTop(heap, 5, [&](const Ref& r) { return f.expand(r); });
    CHECK(got.empty());
}
