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

#include "emtopk/pst.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace emtopk {

PstBaseData::PstBaseData() = default;
PstBaseData::PstBaseData(PstBaseData&&) noexcept = default;
PstBaseData& PstBaseData::operator=(PstBaseData&&) noexcept = default;
PstBaseData::~PstBaseData() = default;

namespace {

bool yDesc(const Point& a, const Point& b) { return a.y > b.y; }

void insertSortedByY(std::vector<Point>& pilot, Point p) {
    auto it = std::lower_bound(pilot.begin(), pilot.end(), p, yDesc);
    pilot.insert(it, p);
}

std::size_t ceilLg(std::size_t n) {
    std::size_t lg = 0;
    while ((std::size_t{1} << lg) < n) ++lg;
    return lg < 1 ? 1 : lg;
}

} // namespace

BigkPst::BigkPst(BlockStore& store, std::vector<Point> points) : store_(&store) {
    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.x < b.x; });
    std::vector<Key> xs;
    xs.reserve(points.size());
    for (const Point& p : points) {
        if (p.x == kNegInfKey || p.x == kMaxKey || p.y == kNegInfKey || p.y == kMaxKey)
            throw std::invalid_argument("BigkPst: reserved coordinate code");
        if (!xs.empty() && xs.back() == p.x)
            throw std::invalid_argument("BigkPst: duplicate x coordinate");
        if (!liveY_.insert(p.y).second)
            throw std::invalid_argument("BigkPst: duplicate score");
        xs.push_back(p.x);
        live_.emplace(p.x, p.y);
    }

    WbbParams wp;
    wp.branching = std::max<std::size_t>(4, store_->B());
    wp.leafCapacity = std::max<std::size_t>(4, store_->B());
    tree_ = std::make_unique<Tree>(*store_, wp);
    tree_->build(xs);
    logBound_ = ceilLg(std::max<std::size_t>(2, points.size()));

    BaseNode* root = tree_->root();
    if (root->isLeaf()) {
        rootLeafBold_ = std::make_unique<BoldNode>();
        rootLeafBold_->host = root;
        rootLeafBold_->pilot = std::move(points);
        std::sort(rootLeafBold_->pilot.begin(), rootLeafBold_->pilot.end(), yDesc);
        writePilot(rootLeafBold_.get());
        writeRepBlocks(root);
        return;
    }
    buildBoldRec(root, kNegInfKey, kMaxKey);
    assignLeafPilots(root, std::move(points));
    fillPilots(root->data.boldRoot.get());
    clearSubtreeTokens(root->data.boldRoot.get()); // fills are not token events
    pendingLeafPoints_.clear();
    tree_->forEachNode(root, [&](BaseNode* u) {
        if (!u->isLeaf()) writeRepBlocks(u);
    });
}

BigkPst::~BigkPst() = default;

// ---------------------------------------------------------------- topology

BigkPst::BoldNode* BigkPst::boldRoot() {
    if (rootLeafBold_) return rootLeafBold_.get();
    return tree_->root()->data.boldRoot.get();
}

std::vector<BigkPst::BoldNode*> BigkPst::boldChildren(const BoldNode* v) const {
    std::vector<BoldNode*> out;
    if (v->left) {
        out.push_back(v->left.get());
        if (v->right) out.push_back(v->right.get());
        return out;
    }
    if (v->host->isLeaf()) return out; // degenerate root-leaf node
    BaseNode* child = v->host->children[v->lo].get();
    if (!child->isLeaf()) out.push_back(child->data.boldRoot.get());
    return out;
}

BigkPst::BoldNode* BigkPst::childContaining(BoldNode* v, Key x) const {
    for (BoldNode* c : boldChildren(v))
        if (c->slabLo <= x && (c->slabHi == kMaxKey || x < c->slabHi)) return c;
    return nullptr;
}

bool BigkPst::slabIntersects(const BoldNode* v, Key x1, Key x2) {
    if (v->slabLo > x2) return false;
    if (v->slabHi != kMaxKey && v->slabHi <= x1) return false;
    return true;
}

bool BigkPst::slabContained(const BoldNode* v, Key x1, Key x2) {
    if (v->slabLo < x1) return false;
    if (v->slabHi == kMaxKey) return x2 == kMaxKey;
    return v->slabHi - 1 <= x2;
}

std::unique_ptr<BigkPst::BoldNode> BigkPst::buildBoldRange(BaseNode* u, std::size_t lo,
                                                           std::size_t hi, Key slabLo,
                                                           Key slabHi) {
    auto v = std::make_unique<BoldNode>();
    v->host = u;
    v->lo = lo;
    v->hi = hi;
    v->slabLo = slabLo;
    v->slabHi = slabHi;
    if (lo == hi) {
        BaseNode* child = u->children[lo].get();
        if (!child->isLeaf()) {
            buildBoldRec(child, slabLo, slabHi);
            child->data.boldRoot->parent = v.get();
        }
        return v;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    Key split = u->children[mid + 1]->xLow;
    v->left = buildBoldRange(u, lo, mid, slabLo, split);
    v->left->parent = v.get();
    v->right = buildBoldRange(u, mid + 1, hi, split, slabHi);
    v->right->parent = v.get();
    return v;
}

void BigkPst::buildBoldRec(BaseNode* u, Key slabLo, Key slabHi) {
    u->data.repBlocks.clear();
    u->data.boldRoot = buildBoldRange(u, 0, u->children.size() - 1, slabLo, slabHi);
}

void BigkPst::assignLeafPilots(BaseNode* subtree, std::vector<Point> points) {
    std::vector<BaseNode*> leaves;
    tree_->forEachNode(subtree, [&](BaseNode* n) {
        if (n->isLeaf()) leaves.push_back(n);
    });
    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.x < b.x; });
    std::size_t li = 0;
    for (const Point& p : points) {
        while (li + 1 < leaves.size() && leaves[li + 1]->xLow <= p.x) ++li;
        pendingLeafPoints_[leaves[li]].push_back(p);
    }
}

// --------------------------------------------------------------- pilot I/O

void BigkPst::chargePilotRead(BoldNode* v) {
    std::size_t blocks =
        std::max<std::size_t>(1, (2 * v->pilot.size() + store_->B() - 1) / store_->B());
    for (std::size_t i = 0; i < blocks && i < v->pilotBlocks.size(); ++i)
        store_->read(v->pilotBlocks[i]);
}

void BigkPst::writePilot(BoldNode* v) {
    std::vector<Word> words;
    words.reserve(2 * v->pilot.size() + 1);
    for (const Point& p : v->pilot) {
        words.push_back(p.x);
        words.push_back(p.y);
    }
    if (words.empty()) words.push_back(0);
    std::size_t need = (words.size() + store_->B() - 1) / store_->B();
    while (v->pilotBlocks.size() < need) v->pilotBlocks.push_back(store_->alloc());
    store_->writeWords(v->pilotBlocks, words);
    markRepDirty(v);
}

void BigkPst::markRepDirty(BoldNode* v) { dirtyHosts_.insert(v->host); }

void BigkPst::flushRepBlocks() {
    for (BaseNode* host : dirtyHosts_) writeRepBlocks(host);
    dirtyHosts_.clear();
}

template <class Fn>
void BigkPst::forEachHostNode(BoldNode* v, Fn&& fn) {
    fn(v);
    if (v->left) forEachHostNode(v->left.get(), fn);
    if (v->right) forEachHostNode(v->right.get(), fn);
}

void BigkPst::writeRepBlocks(BaseNode* host) {
    BoldNode* top = host->isLeaf() ? rootLeafBold_.get() : host->data.boldRoot.get();
    if (!top) return;
    std::vector<Word> words;
    forEachHostNode(top, [&](BoldNode* v) {
        words.push_back(v->pilot.empty() ? kNegInfKey : v->rep().y);
    });
    std::size_t need = (words.size() + store_->B() - 1) / store_->B();
    while (host->data.repBlocks.size() < need)
        host->data.repBlocks.push_back(store_->alloc());
    store_->writeWords(host->data.repBlocks, words);
}

void BigkPst::chargeRepRead(BaseNode* host) {
    std::size_t count = 0;
    BoldNode* top = host->isLeaf() ? rootLeafBold_.get() : host->data.boldRoot.get();
    if (!top) return;
    forEachHostNode(top, [&](BoldNode*) { ++count; });
    std::size_t blocks = std::max<std::size_t>(1, (count + store_->B() - 1) / store_->B());
    for (std::size_t i = 0; i < blocks && i < host->data.repBlocks.size(); ++i)
        store_->read(host->data.repBlocks[i]);
}

// ------------------------------------------------------------- maintenance

bool BigkPst::underflows(const BoldNode* v) const {
    if (v->pilot.size() >= store_->B() / 2) return false;
    for (BoldNode* c : boldChildren(v))
        if (!c->pilotEmpty()) return true;
    return false;
}

bool BigkPst::pullUp(BoldNode* v) {
    std::size_t B = store_->B();
    std::size_t req = std::min((B + 1) / 2, B - v->pilot.size());
    if (req == 0) return false;
    ++counters_.pullUps;

    struct Cand {
        Point p;
        BoldNode* owner;
    };
    std::vector<Cand> cands;
    auto kids = boldChildren(v);
    for (BoldNode* c : kids) {
        if (c->pilotEmpty()) continue;
        chargePilotRead(c);
        for (const Point& p : c->pilot) cands.push_back({p, c});
    }
    bool drained = cands.size() < req;
    std::size_t take = std::min(req, cands.size());
    std::sort(cands.begin(), cands.end(),
              [](const Cand& a, const Cand& b) { return a.p.y > b.p.y; });

    std::unordered_set<BoldNode*> touched;
    for (std::size_t i = 0; i < take; ++i) {
        BoldNode* c = cands[i].owner;
        auto it = std::find(c->pilot.begin(), c->pilot.end(), cands[i].p);
        c->pilot.erase(it);
        insertSortedByY(v->pilot, cands[i].p);
        ++counters_.promotions;
        // token passing: the parent hands one deletion token down
        --v->delTokens;
        if (!boldChildren(c).empty()) ++c->delTokens;
        touched.insert(c);
    }
    for (BoldNode* c : touched) writePilot(c);
    writePilot(v);
    if (drained) ++counters_.drains;
    return drained;
}

void BigkPst::remedy(BoldNode* v) {
    if (!underflows(v)) return;
    std::size_t B = store_->B();
    for (int round = 0; round < 2; ++round) {
        bool drained = pullUp(v);
        if (drained) {
            clearSubtreeTokens(v);
            return;
        }
        for (BoldNode* c : boldChildren(v))
            if (underflows(c)) remedy(c);
        if (v->pilot.size() >= B) return;
    }
}

void BigkPst::pushDown(BoldNode* v) {
    std::size_t B = store_->B();
    if (v->pilot.size() <= 2 * B) return;
    ++counters_.pushDowns;
    chargePilotRead(v);
    std::size_t moveCnt = v->pilot.size() - B;
    std::vector<Point> moved(v->pilot.end() - moveCnt, v->pilot.end());
    v->pilot.resize(B);

    auto kids = boldChildren(v);
    std::unordered_set<BoldNode*> touched;
    for (const Point& p : moved) {
        BoldNode* c = childContaining(v, p.x);
        insertSortedByY(c->pilot, p);
        ++counters_.demotions;
        --v->insTokens;
        if (!boldChildren(c).empty()) ++c->insTokens;
        touched.insert(c);
    }
    writePilot(v);
    for (BoldNode* c : touched) writePilot(c);
    for (BoldNode* c : kids) pushDown(c);
}

void BigkPst::clearSubtreeTokens(BoldNode* v) {
    v->insTokens = 0;
    v->delTokens = 0;
    for (BoldNode* c : boldChildren(v)) clearSubtreeTokens(c);
}

void BigkPst::fillPilots(BoldNode* v) {
    auto kids = boldChildren(v);
    for (BoldNode* c : kids) fillPilots(c);
    if (kids.empty()) {
        // terminal leaf: takes the grounded points of its base leaf
        const BaseNode* baseLeaf =
            v->host->isLeaf() ? v->host : v->host->children[v->lo].get();
        auto it = pendingLeafPoints_.find(baseLeaf);
        v->pilot = it == pendingLeafPoints_.end() ? std::vector<Point>{}
                                                  : std::move(it->second);
        std::sort(v->pilot.begin(), v->pilot.end(), yDesc);
        writePilot(v);
        return;
    }
    v->pilot.clear();
    fillFix(v);
    writePilot(v);
}

// Restores the freshly-built state below v: every node has a full pilot
// set of B points, or all its proper descendants are empty. Children are
// assumed to satisfy this already; points stolen from them are replaced
// from below recursively. Token rules do not apply here (rebuilds clear
// the ledger), which is what lets the stronger postcondition hold.
void BigkPst::fillFix(BoldNode* v) {
    std::size_t B = store_->B();
    auto kids = boldChildren(v);
    if (kids.empty()) return;
    while (v->pilot.size() < B) {
        struct Cand {
            Point p;
            BoldNode* owner;
        };
        std::vector<Cand> cands;
        for (BoldNode* c : kids) {
            if (c->pilotEmpty()) continue;
            chargePilotRead(c);
            for (const Point& p : c->pilot) cands.push_back({p, c});
        }
        if (cands.empty()) break; // children satisfied + empty => subtree drained
        std::sort(cands.begin(), cands.end(),
                  [](const Cand& a, const Cand& b) { return a.p.y > b.p.y; });
        std::size_t take = std::min(B - v->pilot.size(), cands.size());
        std::unordered_set<BoldNode*> touched;
        for (std::size_t i = 0; i < take; ++i) {
            BoldNode* c = cands[i].owner;
            auto it = std::find(c->pilot.begin(), c->pilot.end(), cands[i].p);
            c->pilot.erase(it);
            insertSortedByY(v->pilot, cands[i].p);
            ++counters_.promotions;
            touched.insert(c);
        }
        writePilot(v);
        for (BoldNode* c : touched) {
            writePilot(c);
            fillFix(c);
        }
    }
}

void BigkPst::ground(BoldNode* v) {
    auto kids = boldChildren(v);
    if (kids.empty()) return;
    if (!v->pilot.empty()) {
        chargePilotRead(v);
        for (const Point& p : v->pilot) {
            BoldNode* c = childContaining(v, p.x);
            insertSortedByY(c->pilot, p);
            ++counters_.demotions;
        }
        v->pilot.clear();
        writePilot(v);
        for (BoldNode* c : kids) writePilot(c);
    }
    for (BoldNode* c : kids) ground(c);
}

void BigkPst::collectSubtreePoints(BoldNode* v, std::vector<Point>& out) {
    if (!v->pilot.empty()) {
        chargePilotRead(v);
        out.insert(out.end(), v->pilot.begin(), v->pilot.end());
    }
    for (BoldNode* c : boldChildren(v)) collectSubtreePoints(c, out);
}

void BigkPst::rebuildAt(BaseNode* at) {
    ++counters_.rebuilds;
    flushRepBlocks();
    BoldNode* vhat = at->isLeaf() ? rootLeafBold_.get() : at->data.boldRoot.get();
    Key slabLo = vhat->slabLo, slabHi = vhat->slabHi;
    BoldNode* bridge = vhat->parent; // slab leaf above the rebuilt region, survives

    ground(vhat);
    std::vector<Point> pts;
    collectSubtreePoints(vhat, pts);

    BaseNode* fresh = tree_->rebuildSubtree(at);
    if (fresh == tree_->root()) rootLeafBold_.reset();

    buildBoldRec(fresh, slabLo, slabHi);
    if (bridge) fresh->data.boldRoot->parent = bridge;
    assignLeafPilots(fresh, std::move(pts));
    fillPilots(fresh->data.boldRoot.get());
    clearSubtreeTokens(fresh->data.boldRoot.get()); // rebuilds wipe the ledger
    pendingLeafPoints_.clear();
    dirtyHosts_.clear(); // all dirty hosts were inside the rebuilt subtree
    tree_->forEachNode(fresh, [&](BaseNode* u) {
        if (!u->isLeaf()) writeRepBlocks(u);
    });
}

// ------------------------------------------------------------------ update

BigkPst::BoldNode*
BigkPst::placementTarget(Point p, std::unordered_set<const BaseNode*>& chargedHosts) {
    BoldNode* v = boldRoot();
    auto charge = [&](BoldNode* n) {
        if (chargedHosts.insert(n->host).second) chargeRepRead(n->host);
    };
    charge(v);
    while (true) {
        if (v->pilot.empty() || p.y > v->rep().y) return v;
        auto kids = boldChildren(v);
        bool anyNonEmpty = false;
        for (BoldNode* c : kids) {
            charge(c);
            if (!c->pilotEmpty()) anyNonEmpty = true;
        }
        if (!anyNonEmpty) return v;
        v = childContaining(v, p.x);
    }
}

void BigkPst::insert(Point p) {
    if (p.x == kNegInfKey || p.x == kMaxKey || p.y == kNegInfKey || p.y == kMaxKey)
        throw std::invalid_argument("BigkPst::insert: reserved coordinate code");
    if (live_.count(p.x))
        throw std::invalid_argument("BigkPst::insert: duplicate x coordinate");
    if (liveY_.count(p.y))
        throw std::invalid_argument("BigkPst::insert: duplicate score");

    // x may persist in the base tree from a deleted point; reuse it then
    BaseNode* leaf = tree_->locateLeaf(p.x);
    bool newKey = !std::binary_search(leaf->keys.begin(), leaf->keys.end(), p.x);
    std::optional<Tree::RebalanceReport> report;
    if (newKey) report = tree_->insertKey(p.x);

    std::unordered_set<const BaseNode*> chargedHosts;
    BoldNode* v = placementTarget(p, chargedHosts);
    chargePilotRead(v);
    insertSortedByY(v->pilot, p);
    if (!boldChildren(v).empty()) ++v->insTokens; // tokens vanish at leaves
    writePilot(v);
    if (v->pilot.size() > 2 * store_->B()) pushDown(v);

    live_.emplace(p.x, p.y);
    liveY_.insert(p.y);
    if (report) {
        rebuildAt(report->rebuildAt);
    } else {
        flushRepBlocks();
    }
}

void BigkPst::erase(Point p) {
    auto it = live_.find(p.x);
    if (it == live_.end() || it->second != p.y)
        throw std::invalid_argument("BigkPst::erase: unknown point");

    std::unordered_set<const BaseNode*> chargedHosts;
    BoldNode* v = boldRoot();
    auto charge = [&](BoldNode* n) {
        if (chargedHosts.insert(n->host).second) chargeRepRead(n->host);
    };
    charge(v);
    while (true) {
        if (v->pilot.empty())
            throw std::logic_error("BigkPst::erase: point missing from pilots");
        if (p.y >= v->rep().y) break; // heap order: p cannot be deeper
        BoldNode* c = childContaining(v, p.x);
        if (!c) throw std::logic_error("BigkPst::erase: point missing from pilots");
        charge(c);
        v = c;
    }
    chargePilotRead(v);
    auto pos = std::find(v->pilot.begin(), v->pilot.end(), p);
    if (pos == v->pilot.end())
        throw std::logic_error("BigkPst::erase: point missing from pilots");
    v->pilot.erase(pos);
    if (!boldChildren(v).empty()) ++v->delTokens;
    writePilot(v);

    live_.erase(it);
    liveY_.erase(p.y);
    if (underflows(v)) remedy(v);
    flushRepBlocks();
}

// ------------------------------------------------------------------- query

std::vector<Point> BigkPst::queryTopk(Key x1, Key x2, std::size_t k) {
    if (x1 > x2) throw std::invalid_argument("BigkPst::queryTopk: x1 > x2");
    if (k == 0) return {};
    std::size_t B = store_->B();

    std::unordered_set<const BaseNode*> chargedHosts;
    auto boldPath = [&](Key x) {
        std::vector<BoldNode*> path;
        BoldNode* v = boldRoot();
        while (v) {
            if (chargedHosts.insert(v->host).second) chargeRepRead(v->host);
            path.push_back(v);
            v = childContaining(v, x);
        }
        return path;
    };
    std::vector<BoldNode*> path1 = boldPath(x1);
    std::vector<BoldNode*> path2 = boldPath(x2);

    std::unordered_set<BoldNode*> pathNodes(path1.begin(), path1.end());
    pathNodes.insert(path2.begin(), path2.end());

    std::unordered_set<BoldNode*> readNodes;
    std::vector<Point> candidates;
    // min-heap of the k highest in-range candidate scores seen so far,
    // driving the provable early exit of the extraction below
    std::priority_queue<Key, std::vector<Key>, std::greater<Key>> best;
    auto harvest = [&](BoldNode* v) {
        if (!readNodes.insert(v).second) return;
        if (v->pilot.empty()) return;
        chargePilotRead(v);
        for (const Point& p : v->pilot)
            if (p.x >= x1 && p.x <= x2) {
                candidates.push_back(p);
                if (best.size() < k) best.push(p.y);
                else if (p.y > best.top()) {
                    best.pop();
                    best.push(p.y);
                }
            }
    };
    for (BoldNode* v : pathNodes) harvest(v); // Q1

    // split node: deepest common prefix of the two paths
    std::size_t common = 0;
    while (common < path1.size() && common < path2.size() &&
           path1[common] == path2[common])
        ++common;
    std::unordered_set<BoldNode*> suffixNodes;
    for (std::size_t i = common == 0 ? 0 : common - 1; i < path1.size(); ++i)
        suffixNodes.insert(path1[i]);
    for (std::size_t i = common == 0 ? 0 : common - 1; i < path2.size(); ++i)
        suffixNodes.insert(path2[i]);

    // Best-first extraction over contained slabs, ordered by representative
    // score. Every item carries a bound: the representative of the node it
    // was discovered under. The heap-order invariant (a node's whole pilot
    // set lies strictly below its parent's representative) makes the bound
    // an upper limit on everything still unharvested under that item, so
    // once the k-th best in-range candidate reaches the largest live bound
    // the top-k is provably complete and extraction can stop. The phi=16
    // budget stays as the worst-case cap that guarantees sufficiency.
    struct QItem {
        Key rep;
        Key bound;
        BoldNode* node;
    };
    auto byRep = [](const QItem& a, const QItem& b) { return a.rep < b.rep; };
    std::priority_queue<QItem, std::vector<QItem>, decltype(byRep)> frontier(byRep);
    std::multiset<Key> bounds;
    auto enqueue = [&](BoldNode* c, Key bound) {
        frontier.push({c->rep().y, bound, c});
        bounds.insert(bound);
    };
    for (BoldNode* v : suffixNodes)
        for (BoldNode* c : boldChildren(v))
            if (!suffixNodes.count(c) && slabContained(c, x1, x2) && !c->pilotEmpty())
                enqueue(c, v->pilotEmpty() ? kMaxKey : v->rep().y);

    std::size_t t = 16 * (logBound_ + (k + B - 1) / B);
    std::vector<BoldNode*> extracted;
    while (!frontier.empty() && extracted.size() < t) {
        Key unseenCap = *bounds.rbegin();
        if (best.size() >= k && best.top() >= unseenCap) break;
        QItem it = frontier.top();
        frontier.pop();
        bounds.erase(bounds.find(it.bound));
        extracted.push_back(it.node);
        harvest(it.node); // Q2
        for (BoldNode* c : boldChildren(it.node)) {
            store_->read(c->pilotBlocks.front()); // fetch the child's representative
            if (!c->pilotEmpty()) enqueue(c, it.rep);
        }
    }

    std::unordered_set<BoldNode*> inR(extracted.begin(), extracted.end());
    for (BoldNode* v : extracted) { // Q3: qualifying siblings + children
        if (v->parent) {
            BoldNode* sib = v->parent->left.get() == v ? v->parent->right.get()
                                                       : v->parent->left.get();
            if (sib && !inR.count(sib) && slabContained(sib, x1, x2)) harvest(sib);
        }
        for (BoldNode* c : boldChildren(v)) harvest(c);
    }

    std::sort(candidates.begin(), candidates.end(), yDesc);
    if (candidates.size() > k) candidates.resize(k);
    return candidates;
}

void BigkPst::report3SidedRec(BoldNode* v, Key x1, Key x2, Key yMin,
                              std::vector<Point>& out) {
    if (v->pilot.empty() || !slabIntersects(v, x1, x2)) return;
    chargePilotRead(v);
    for (const Point& p : v->pilot)
        if (p.x >= x1 && p.x <= x2 && p.y >= yMin) out.push_back(p);
    // all descendants are below this node's representative
    if (v->rep().y >= yMin)
        for (BoldNode* c : boldChildren(v)) report3SidedRec(c, x1, x2, yMin, out);
}

std::vector<Point> BigkPst::report3Sided(Key x1, Key x2, Key yMin) {
    if (x1 > x2) throw std::invalid_argument("BigkPst::report3Sided: x1 > x2");
    std::vector<Point> out;
    report3SidedRec(boldRoot(), x1, x2, yMin, out);
    return out;
}

// ------------------------------------------------------------------- audit

std::vector<Point> BigkPst::debugLivePoints() const {
    std::vector<Point> out;
    out.reserve(live_.size());
    for (const auto& [x, y] : live_) out.push_back({x, y});
    return out;
}

bool BigkPst::auditNode(BoldNode* v, PstAudit& report, std::size_t singleRun) {
    auto fail = [&](const std::string& msg) {
        report.ok = false;
        std::ostringstream os;
        os << msg << " (slab [" << v->slabLo << ", " << v->slabHi << "))";
        report.message = os.str();
        return false;
    };
    std::size_t B = store_->B();
    ++report.boldNodes;
    report.pilotPoints += v->pilot.size();

    if (v->pilot.size() > 2 * B) return fail("pilot set larger than 2B");
    for (std::size_t i = 0; i < v->pilot.size(); ++i) {
        const Point& p = v->pilot[i];
        if (i > 0 && !(v->pilot[i - 1].y > p.y)) return fail("pilot not sorted by score");
        if (p.x < v->slabLo || (v->slabHi != kMaxKey && p.x >= v->slabHi))
            return fail("pilot point outside slab");
        auto it = live_.find(p.x);
        if (it == live_.end() || it->second != p.y)
            return fail("pilot holds a non-live point");
    }

    auto kids = boldChildren(v);
    bool anyDescendant = false;
    for (BoldNode* c : kids) {
        if (!c->pilotEmpty()) {
            anyDescendant = true;
            if (!v->pilot.empty() && !(v->rep().y > c->pilot.front().y))
                return fail("heap order violated between parent and child");
            if (v->pilot.empty()) return fail("empty pilot above a nonempty child");
        }
    }
    if (anyDescendant && v->pilot.size() < B / 2)
        return fail("pilot below B/2 with nonempty descendants");

    if (!kids.empty()) {
        if (v->insTokens < 0 || v->delTokens < 0)
            return fail("negative token count");
        if (v->insTokens < static_cast<long long>(v->pilot.size()) -
                               static_cast<long long>(B))
            return fail("insertion-token invariant violated");
        if (anyDescendant &&
            v->delTokens < static_cast<long long>(B) -
                               static_cast<long long>(v->pilot.size()))
            return fail("deletion-token invariant violated");
    } else if (v->insTokens != 0 || v->delTokens != 0) {
        return fail("leaf holds tokens");
    }

    // a 3-node path must contain a node with two children
    std::size_t run = kids.size() == 1 ? singleRun + 1 : 0;
    if (run >= 3) return fail("three consecutive single-child nodes");

    for (BoldNode* c : kids)
        if (!auditNode(c, report, run)) return false;
    return true;
}

PstAudit BigkPst::auditInvariants() {
    PstAudit report;
    if (!tree_->weightsValid()) {
        report.ok = false;
        report.message = "base tree weight bounds violated";
        return report;
    }
    if (!auditNode(boldRoot(), report, 0)) return report;

    // conservation: pilots partition the live set
    if (report.pilotPoints != live_.size()) {
        report.ok = false;
        report.message = "pilot sets do not partition the live points";
        return report;
    }

    // representative blocks must match the in-memory pilots
    bool repOk = true;
    auto checkHost = [&](BaseNode* host) {
        if (!repOk) return;
        BoldNode* top = host->isLeaf() ? rootLeafBold_.get() : host->data.boldRoot.get();
        if (!top) return;
        std::vector<Word> expect;
        forEachHostNode(top, [&](BoldNode* v) {
            expect.push_back(v->pilot.empty() ? kNegInfKey : v->rep().y);
        });
        std::vector<Word> got = store_->readWords(host->data.repBlocks, expect.size());
        if (got != expect) repOk = false;
    };
    if (rootLeafBold_) {
        checkHost(tree_->root());
    } else {
        tree_->forEachNode(tree_->root(), [&](BaseNode* u) {
            if (!u->isLeaf()) checkHost(u);
        });
    }
    if (!repOk) {
        report.ok = false;
        report.message = "representative blocks out of date";
    }
    return report;
}

} // namespace emtopk
