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

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "emtopk/em.hpp"
#include "emtopk/encode.hpp"

namespace emtopk {

struct WbbParams {
    std::size_t branching = 8;
    std::size_t leafCapacity = 8;

    void validate() const {
        if (branching < 4)
            throw std::invalid_argument("WbbParams: branching must be >= 4");
        if (leafCapacity < 1)
            throw std::invalid_argument("WbbParams: leafCapacity must be >= 1");
    }
};

/// Weight-balanced B-tree over x-keys, generic in the per-node payload.
///
/// Levels are numbered bottom-up with leaves at level 0. A level-i node
/// carries weight (stored key count) in [W_i/4, W_i] with
/// W_i = leafCapacity * branching^i; a fresh build places every subtree
/// near W_i/2 so that either bound takes Omega(W_i) updates to reach.
/// Keys are never removed: deletions in the owning structure leave dead
/// keys behind, and a global rebuild prunes them.
///
/// insertKey only reports the node whose subtree must be rebuilt; the
/// owner runs its own preparation (e.g. pilot grounding) and then calls
/// rebuildSubtree, rebuilding payloads afterwards.
template <class NodeData>
class WbbTree {
  public:
    struct Node {
        int level = 0;
        std::size_t weight = 0;
        Key xLow = 0; // leftmost child of any node conceptually extends to -inf
        Node* parent = nullptr;
        std::vector<std::unique_ptr<Node>> children;
        std::vector<Key> keys; // leaf only, sorted
        NodeData data;
        BlockId metaBlock = 0;

        bool isLeaf() const { return level == 0; }
    };

    struct CanonicalRange {
        Node* node;
        std::size_t childLo = 0, childHi = 0; // multi-slab over node's children
        bool isLeafRange = false;             // node is a boundary leaf
    };

    struct RebalanceReport {
        Node* unbalanced; // highest node over its weight bound
        Node* rebuildAt;  // its parent, or the root for a full-height rebuild
    };

    WbbTree(BlockStore& store, WbbParams params) : store_(&store), params_(params) {
        params_.validate();
        build({});
    }

    const WbbParams& params() const { return params_; }
    Node* root() { return root_.get(); }
    const Node* root() const { return root_.get(); }
    std::size_t keyCount() const { return root_->weight; }
    std::size_t height() const { return static_cast<std::size_t>(root_->level) + 1; }

    std::size_t weightBound(int level) const {
        std::size_t w = params_.leafCapacity;
        for (int i = 0; i < level; ++i) w *= params_.branching;
        return w;
    }

    void build(std::vector<Key> sortedKeys) {
        int level = 0;
        while (weightBound(level) < sortedKeys.size()) ++level;
        root_ = buildNode(level, sortedKeys, 0, sortedKeys.size(), nullptr);
    }

    /// Root-to-leaf path whose leaf slab contains x.
    std::vector<Node*> locatePath(Key x) {
        std::vector<Node*> path;
        Node* n = root_.get();
        while (true) {
            store_->read(n->metaBlock);
            path.push_back(n);
            if (n->isLeaf()) return path;
            n = childContaining(n, x);
        }
    }

    Node* locateLeaf(Key x) { return locatePath(x).back(); }

    /// Index of the child of n whose slab contains x.
    std::size_t childIndex(Node* n, Key x) const {
        std::size_t idx = 0;
        for (std::size_t i = 1; i < n->children.size(); ++i)
            if (n->children[i]->xLow <= x) idx = i;
        return idx;
    }

    /// Inserts a fresh key; returns a report if some node went over-weight.
    std::optional<RebalanceReport> insertKey(Key x) {
        auto path = locatePath(x);
        Node* leaf = path.back();
        auto it = std::lower_bound(leaf->keys.begin(), leaf->keys.end(), x);
        if (it != leaf->keys.end() && *it == x)
            throw std::invalid_argument("WbbTree::insertKey: duplicate key");
        leaf->keys.insert(it, x);
        for (Node* n : path) {
            ++n->weight;
            store_->write(n->metaBlock, Block(store_->B()));
        }
        for (Node* n : path) {
            if (n->weight > weightBound(n->level)) {
                return RebalanceReport{n, n->parent ? n->parent : root_.get()};
            }
        }
        return std::nullopt;
    }

    /// Rebuilds the subtree rooted at "at" from its stored keys, keeping
    /// its level and slab. Returns the replacement node.
    Node* rebuildSubtree(Node* at) {
        std::vector<Key> keys = subtreeKeys(at);
        if (at == root_.get()) {
            build(std::move(keys));
            return root_.get();
        }
        Node* parent = at->parent;
        auto pos = std::find_if(parent->children.begin(), parent->children.end(),
                                [&](auto& p) { return p.get() == at; });
        Key xLow = at->xLow;
        int level = at->level;
        auto fresh = buildNode(level, keys, 0, keys.size(), parent);
        fresh->xLow = xLow;
        *pos = std::move(fresh);
        return pos->get();
    }

    std::vector<Key> subtreeKeys(const Node* n) const {
        std::vector<Key> out;
        collectKeys(n, out);
        // charge the sequential key scan
        for (std::size_t i = 0; i < (out.size() + store_->B() - 1) / store_->B(); ++i)
            store_->read(n->metaBlock);
        return out;
    }

    /// Minimum disjoint cover of [x1,x2] by multi-slabs and boundary leaves.
    std::vector<CanonicalRange> canonicalRanges(Key x1, Key x2) {
        std::vector<CanonicalRange> out;
        if (x1 > x2) return out;
        Node* n = root_.get();
        // descend to the lowest node whose single child slab contains both
        while (!n->isLeaf()) {
            store_->read(n->metaBlock);
            std::size_t c1 = childIndex(n, x1), c2 = childIndex(n, x2);
            if (c1 != c2) {
                if (c1 + 1 <= c2 - 1)
                    out.push_back({n, c1 + 1, c2 - 1, false});
                leftCover(n->children[c1].get(), x1, out);
                rightCover(n->children[c2].get(), x2, out);
                return out;
            }
            n = n->children[c1].get();
        }
        out.push_back({n, 0, 0, true});
        return out;
    }

    template <class Fn>
    void forEachNode(Node* n, Fn&& fn) {
        fn(n);
        for (auto& c : n->children) forEachNode(c.get(), fn);
    }

    /// Weight-bound check over the whole tree (root exempt from the lower
    /// bound; a leaf-root may hold any count up to its capacity).
    bool weightsValid() const { return weightsValidRec(root_.get()); }

  private:
    Node* childContaining(Node* n, Key x) {
        return n->children[childIndex(n, x)].get();
    }

    void leftCover(Node* n, Key x1, std::vector<CanonicalRange>& out) {
        while (!n->isLeaf()) {
            store_->read(n->metaBlock);
            std::size_t c = childIndex(n, x1);
            if (c + 1 < n->children.size())
                out.push_back({n, c + 1, n->children.size() - 1, false});
            n = n->children[c].get();
        }
        store_->read(n->metaBlock);
        out.push_back({n, 0, 0, true});
    }

    void rightCover(Node* n, Key x2, std::vector<CanonicalRange>& out) {
        while (!n->isLeaf()) {
            store_->read(n->metaBlock);
            std::size_t c = childIndex(n, x2);
            if (c > 0) out.push_back({n, 0, c - 1, false});
            n = n->children[c].get();
        }
        store_->read(n->metaBlock);
        out.push_back({n, 0, 0, true});
    }

    std::unique_ptr<Node> buildNode(int level, const std::vector<Key>& keys,
                                    std::size_t lo, std::size_t hi, Node* parent) {
        auto n = std::make_unique<Node>();
        n->level = level;
        n->parent = parent;
        n->weight = hi - lo;
        n->xLow = lo < hi ? keys[lo] : 0;
        n->metaBlock = store_->alloc();
        store_->write(n->metaBlock, Block(store_->B()));
        if (level == 0) {
            n->keys.assign(keys.begin() + lo, keys.begin() + hi);
            std::size_t kb = (n->keys.size() + store_->B() - 1) / store_->B();
            for (std::size_t i = 0; i < kb; ++i)
                store_->write(n->metaBlock, Block(store_->B()));
            return n;
        }
        std::size_t m = hi - lo;
        std::size_t wChild = weightBound(level - 1);
        // target half-full children so both weight bounds have slack
        std::size_t c = (2 * m + wChild - 1) / wChild;
        c = std::max<std::size_t>(c, (m + wChild - 1) / wChild);
        c = std::max<std::size_t>(c, m > 0 ? 1 : 0);
        if (m == 0) c = 1;
        std::size_t base = m / c, extra = m % c;
        std::size_t at = lo;
        for (std::size_t i = 0; i < c; ++i) {
            std::size_t take = base + (i < extra ? 1 : 0);
            n->children.push_back(buildNode(level - 1, keys, at, at + take, n.get()));
            at += take;
        }
        return n;
    }

    void collectKeys(const Node* n, std::vector<Key>& out) const {
        if (n->isLeaf()) {
            out.insert(out.end(), n->keys.begin(), n->keys.end());
            return;
        }
        for (auto& c : n->children) collectKeys(c.get(), out);
    }

    bool weightsValidRec(const Node* n) const {
        std::size_t w = weightBound(n->level);
        if (n->weight > w) return false;
        if (n->parent != nullptr && n->weight * 4 < w) return false;
        if (!n->isLeaf()) {
            std::size_t sum = 0;
            for (auto& c : n->children) {
                sum += c->weight;
                if (!weightsValidRec(c.get())) return false;
            }
            if (sum != n->weight) return false;
        } else if (n->keys.size() != n->weight) {
            return false;
        }
        return true;
    }

    BlockStore* store_;
    WbbParams params_;
    std::unique_ptr<Node> root_;
};

} // namespace emtopk
