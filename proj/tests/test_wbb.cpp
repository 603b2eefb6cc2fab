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
#include "emtopk/wbb.hpp"

using namespace emtopk;

namespace {

struct None {};
using Tree = WbbTree<None>;

std::vector<Key> sortedDistinct(std::mt19937_64& rng, std::size_t n, Key hi) {
    std::set<Key> s;
    while (s.size() < n) s.insert(1 + rng() % hi);
    return {s.begin(), s.end()};
}

// Keys covered by one canonical range (multi-slab: whole child subtrees;
// boundary leaf: clipped to the query interval).
std::vector<Key> coveredKeys(Tree& t, const Tree::CanonicalRange& r, Key x1, Key x2) {
    std::vector<Key> out;
    if (r.isLeafRange) {
        for (Key k : r.node->keys)
            if (k >= x1 && k <= x2) out.push_back(k);
        return out;
    }
    for (std::size_t c = r.childLo; c <= r.childHi; ++c) {
        auto sub = t.subtreeKeys(r.node->children[c].get());
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

} // namespace

TEST_CASE("build places weights within bounds") {
    BlockStore store(EmConfig{8, 64, 64});
    std::mt19937_64 rng(7);
    for (std::size_t n : {0u, 1u, 5u, 37u, 200u, 1311u}) {
        Tree t(store, WbbParams{4, 4});
        t.build(sortedDistinct(rng, n, 1000000));
        CHECK(t.keyCount() == n);
        CHECK(t.weightsValid());
    }
}

TEST_CASE("insert fuzz keeps weights valid under reported rebuilds") {
    BlockStore store(EmConfig{8, 64, 64});
    std::mt19937_64 rng(11);
    Tree t(store, WbbParams{4, 3});
    std::set<Key> present;
    std::size_t rebuilds = 0;
    for (int i = 0; i < 3000; ++i) {
        Key x = 1 + rng() % 1000000;
        if (!present.insert(x).second) {
            CHECK_THROWS_AS(t.insertKey(x), std::invalid_argument);
            continue;
        }
        auto rep = t.insertKey(x);
        if (rep) {
            CHECK(rep->unbalanced->weight > t.weightBound(rep->unbalanced->level));
            t.rebuildSubtree(rep->rebuildAt);
            ++rebuilds;
        }
        CHECK(t.weightsValid());
    }
    CHECK(t.keyCount() == present.size());
    CHECK(rebuilds > 0);
    auto all = t.subtreeKeys(t.root());
    CHECK(std::vector<Key>(present.begin(), present.end()) == all);
}

TEST_CASE("canonical ranges form a disjoint exact cover") {
    BlockStore store(EmConfig{8, 64, 64});
    std::mt19937_64 rng(23);
    for (std::size_t n : {3u, 40u, 700u}) {
        Tree t(store, WbbParams{4, 4});
        auto keys = sortedDistinct(rng, n, 100000);
        t.build(keys);
        for (int q = 0; q < 300; ++q) {
            Key x1 = rng() % 110000, x2 = rng() % 110000;
            if (x1 > x2) std::swap(x1, x2);
            auto ranges = t.canonicalRanges(x1, x2);
            std::size_t leaves = 0, slabs = 0;
            std::vector<Key> got;
            for (const auto& r : ranges) {
                (r.isLeafRange ? leaves : slabs) += 1;
                auto part = coveredKeys(t, r, x1, x2);
                if (!r.isLeafRange)
                    for (Key k : part) { // multi-slabs sit strictly inside
                        CHECK(k > x1);
                        CHECK(k <= x2);
                    }
                got.insert(got.end(), part.begin(), part.end());
            }
            CHECK(leaves <= 2);
            std::vector<Key> want;
            for (Key k : keys)
                if (k >= x1 && k <= x2) want.push_back(k);
            std::sort(got.begin(), got.end());
            CHECK(got == want); // equality implies disjointness too
        }
        // degenerate interval
        CHECK(t.canonicalRanges(5, 4).empty());
    }
}

TEST_CASE("rebuildSubtree preserves keys, level and slab") {
    BlockStore store(EmConfig{8, 64, 64});
    std::mt19937_64 rng(31);
    Tree t(store, WbbParams{4, 2});
    auto keys = sortedDistinct(rng, 500, 100000);
    t.build(keys);
    Tree::Node* child = t.root()->children[1].get();
    int level = child->level;
    Key xLow = child->xLow;
    auto before = t.subtreeKeys(child);
    Tree::Node* fresh = t.rebuildSubtree(child);
    CHECK(fresh->level == level);
    CHECK(fresh->xLow == xLow);
    CHECK(t.subtreeKeys(fresh) == before);
    CHECK(t.weightsValid());
    CHECK(t.subtreeKeys(t.root()) == keys);
}

TEST_CASE("tree walks charge I/O") {
    BlockStore store(EmConfig{8, 64, 64});
    std::mt19937_64 rng(47);
    Tree t(store, WbbParams{4, 4});
    t.build(sortedDistinct(rng, 300, 100000));
    store.statsReset();
    t.locatePath(500);
    CHECK(store.statsSnapshot().reads == t.height());
}
