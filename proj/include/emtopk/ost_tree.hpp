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
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "emtopk/em.hpp"
#include "emtopk/encode.hpp"

namespace emtopk {

/// Block-resident order-statistic B+-tree with fanout Theta(B).
///
/// Keys are 64-bit codes with unsigned order; each entry carries a 64-bit
/// auxiliary word. Internal nodes keep subtree counts (for rank/select)
/// and subtree aux maxima (for range-max queries on composite keys).
/// Every node occupies a fixed set of blocks; visiting a node charges its
/// reads, dirtying it charges its writes. Deletion removes entries without
/// rebalancing (emptied nodes are unlinked), so the height never grows
/// except through insertion splits.
class OstTree {
  public:
    struct Entry {
        Key key;
        std::uint64_t aux;
        bool operator==(const Entry&) const = default;
    };

    OstTree(BlockStore& store, std::size_t fanout = 0)
        : store_(&store),
          fanout_(fanout ? fanout : std::max<std::size_t>(4, store.B())),
          blocksPerNode_((2 * fanout_ + store.B() - 1) / store.B()) {
        root_ = makeNode(true);
    }

    std::size_t size() const { return root_->count; }
    bool empty() const { return root_->count == 0; }

    bool contains(Key k) { return find(k).has_value(); }

    std::optional<Entry> find(Key k) {
        Node* n = root_.get();
        while (true) {
            chargeRead(n);
            if (n->leaf) {
                auto it = lowerBound(n->entries, k);
                if (it != n->entries.end() && it->key == k) return *it;
                return std::nullopt;
            }
            Node* c = childFor(n, k);
            if (!c) return std::nullopt;
            n = c;
        }
    }

    /// Inserts a new key. Returns false (no change) on duplicates.
    bool insert(Key k, std::uint64_t aux) {
        if (!insertRec(root_.get(), k, aux)) return false;
        if (root_->leaf ? root_->entries.size() > fanout_
                        : root_->children.size() > fanout_) {
            auto right = splitNode(root_.get());
            auto newRoot = makeNode(false);
            newRoot->children.push_back(std::move(root_));
            newRoot->children.push_back(std::move(right));
            root_ = std::move(newRoot);
            refresh(root_.get());
            chargeWrite(root_.get());
        }
        return true;
    }

    bool erase(Key k) {
        if (!eraseRec(root_.get(), k)) return false;
        while (!root_->leaf && root_->children.size() == 1)
            root_ = std::move(root_->children.front());
        return true;
    }

    /// Number of keys strictly below k.
    std::size_t countLess(Key k) {
        std::size_t acc = 0;
        Node* n = root_.get();
        while (true) {
            chargeRead(n);
            if (n->leaf) {
                acc += lowerBound(n->entries, k) - n->entries.begin();
                return acc;
            }
            Node* next = nullptr;
            for (auto& c : n->children) {
                if (c->maxKey < k) {
                    acc += c->count;
                } else {
                    next = c.get();
                    break;
                }
            }
            if (!next) return acc;
            n = next;
        }
    }

    std::size_t countInRange(Key lo, Key hi) {
        if (lo > hi) return 0;
        std::size_t below = countLess(lo);
        std::size_t belowEq = hi == kMaxKey ? size() : countLess(hi + 1);
        return belowEq - below;
    }

    /// Descending rank: number of keys >= k. The largest key has rank 1.
    std::size_t rankDesc(Key k) { return size() - countLess(k); }

    /// r-th largest entry, 1-based. r must be in [1, size()].
    Entry selectDesc(std::size_t r) { return selectAsc(size() - r + 1); }

    Entry selectAsc(std::size_t r) {
        assert(r >= 1 && r <= size());
        Node* n = root_.get();
        while (true) {
            chargeRead(n);
            if (n->leaf) return n->entries[r - 1];
            for (auto& c : n->children) {
                if (r <= c->count) {
                    n = c.get();
                    break;
                }
                r -= c->count;
            }
        }
    }

    /// Entry with the maximum aux among keys in [lo, hi].
    std::optional<Entry> maxAuxInRange(Key lo, Key hi) {
        return maxAuxRec(root_.get(), lo, hi);
    }

    std::vector<Entry> collectRange(Key lo, Key hi) {
        std::vector<Entry> out;
        collectRec(root_.get(), lo, hi, out);
        return out;
    }

    std::vector<Entry> collectAll() { return collectRange(0, kMaxKey); }

    std::size_t height() const {
        std::size_t h = 1;
        for (Node* n = root_.get(); !n->leaf; n = n->children.front().get()) ++h;
        return h;
    }

  private:
    struct Node {
        bool leaf;
        std::vector<Entry> entries;                  // leaf payload
        std::vector<std::unique_ptr<Node>> children; // internal payload
        std::size_t count = 0;
        Key maxKey = 0;
        std::uint64_t maxAux = 0;
        std::vector<BlockId> blocks;
    };

    std::unique_ptr<Node> makeNode(bool leaf) {
        auto n = std::make_unique<Node>();
        n->leaf = leaf;
        n->blocks.reserve(blocksPerNode_);
        for (std::size_t i = 0; i < blocksPerNode_; ++i)
            n->blocks.push_back(store_->alloc());
        return n;
    }

    static std::vector<Entry>::iterator lowerBound(std::vector<Entry>& v, Key k) {
        return std::lower_bound(v.begin(), v.end(), k,
                                [](const Entry& e, Key kk) { return e.key < kk; });
    }

    Node* childFor(Node* n, Key k) {
        for (auto& c : n->children)
            if (k <= c->maxKey) return c.get();
        return n->children.empty() ? nullptr : n->children.back().get();
    }

    void chargeRead(Node* n) {
        for (BlockId id : n->blocks) store_->read(id);
    }

    void chargeWrite(Node* n) {
        // Mirror the node content onto its blocks so the store holds real data.
        std::vector<Word> words;
        words.push_back(n->count);
        if (n->leaf) {
            for (auto& e : n->entries) {
                words.push_back(e.key);
                words.push_back(e.aux);
            }
        } else {
            for (auto& c : n->children) {
                words.push_back(c->maxKey);
                words.push_back(c->blocks.front());
            }
        }
        words.resize(std::min(words.size(), n->blocks.size() * store_->B()));
        store_->writeWords(n->blocks, words);
    }

    void refresh(Node* n) {
        if (n->leaf) {
            n->count = n->entries.size();
            n->maxKey = n->entries.empty() ? 0 : n->entries.back().key;
            n->maxAux = 0;
            for (auto& e : n->entries) n->maxAux = std::max(n->maxAux, e.aux);
        } else {
            n->count = 0;
            n->maxKey = 0;
            n->maxAux = 0;
            for (auto& c : n->children) {
                n->count += c->count;
                n->maxKey = std::max(n->maxKey, c->maxKey);
                n->maxAux = std::max(n->maxAux, c->maxAux);
            }
        }
    }

    std::unique_ptr<Node> splitNode(Node* n) {
        auto right = makeNode(n->leaf);
        if (n->leaf) {
            std::size_t half = n->entries.size() / 2;
            right->entries.assign(n->entries.begin() + half, n->entries.end());
            n->entries.resize(half);
        } else {
            std::size_t half = n->children.size() / 2;
            for (std::size_t i = half; i < n->children.size(); ++i)
                right->children.push_back(std::move(n->children[i]));
            n->children.resize(half);
        }
        refresh(n);
        refresh(right.get());
        chargeWrite(n);
        chargeWrite(right.get());
        return right;
    }

    bool insertRec(Node* n, Key k, std::uint64_t aux) {
        chargeRead(n);
        if (n->leaf) {
            auto it = lowerBound(n->entries, k);
            if (it != n->entries.end() && it->key == k) return false;
            n->entries.insert(it, Entry{k, aux});
            refresh(n);
            chargeWrite(n);
            return true;
        }
        Node* c = childFor(n, k);
        if (!insertRec(c, k, aux)) return false;
        if (c->leaf ? c->entries.size() > fanout_ : c->children.size() > fanout_) {
            auto right = splitNode(c);
            auto pos = std::find_if(n->children.begin(), n->children.end(),
                                    [&](auto& p) { return p.get() == c; });
            n->children.insert(pos + 1, std::move(right));
        }
        refresh(n);
        chargeWrite(n);
        return true;
    }

    bool eraseRec(Node* n, Key k) {
        chargeRead(n);
        if (n->leaf) {
            auto it = lowerBound(n->entries, k);
            if (it == n->entries.end() || it->key != k) return false;
            n->entries.erase(it);
            refresh(n);
            chargeWrite(n);
            return true;
        }
        Node* c = childFor(n, k);
        if (!c || !eraseRec(c, k)) return false;
        if (c->count == 0) {
            auto pos = std::find_if(n->children.begin(), n->children.end(),
                                    [&](auto& p) { return p.get() == c; });
            n->children.erase(pos);
        }
        refresh(n);
        chargeWrite(n);
        return true;
    }

    std::optional<Entry> maxAuxRec(Node* n, Key lo, Key hi) {
        chargeRead(n);
        if (n->leaf) {
            std::optional<Entry> best;
            for (auto& e : n->entries)
                if (e.key >= lo && e.key <= hi && (!best || e.aux > best->aux))
                    best = e;
            return best;
        }
        std::optional<Entry> best;
        Node* bestContained = nullptr;
        Key childLo = 0;
        for (auto& c : n->children) {
            Key childHi = c->maxKey;
            if (childLo <= hi && childHi >= lo) {
                bool contained = childLo >= lo && childHi <= hi;
                if (contained) {
                    if (!bestContained || c->maxAux > bestContained->maxAux)
                        bestContained = c.get();
                } else {
                    auto r = maxAuxRec(c.get(), lo, hi);
                    if (r && (!best || r->aux > best->aux)) best = r;
                }
            }
            childLo = childHi == kMaxKey ? kMaxKey : childHi + 1;
        }
        if (bestContained && (!best || bestContained->maxAux > best->aux)) {
            auto r = descendMax(bestContained);
            if (!best || r.aux > best->aux) best = r;
        }
        return best;
    }

    Entry descendMax(Node* n) {
        chargeRead(n);
        if (n->leaf) {
            Entry best = n->entries.front();
            for (auto& e : n->entries)
                if (e.aux > best.aux) best = e;
            return best;
        }
        Node* c = n->children.front().get();
        for (auto& p : n->children)
            if (p->maxAux > c->maxAux) c = p.get();
        return descendMax(c);
    }

    void collectRec(Node* n, Key lo, Key hi, std::vector<Entry>& out) {
        chargeRead(n);
        if (n->leaf) {
            for (auto& e : n->entries)
                if (e.key >= lo && e.key <= hi) out.push_back(e);
            return;
        }
        Key childLo = 0;
        for (auto& c : n->children) {
            if (childLo <= hi && c->maxKey >= lo) collectRec(c.get(), lo, hi, out);
            childLo = c->maxKey == kMaxKey ? kMaxKey : c->maxKey + 1;
        }
    }

    BlockStore* store_;
    std::size_t fanout_;
    std::size_t blocksPerNode_;
    std::unique_ptr<Node> root_;
};

} // namespace emtopk
