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

#include "emtopk/smallk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace emtopk {

namespace {

// Round-schedule constant for union-rank selection. It is deliberately
// smaller than the sources' rank window (kSketchRatio): probe depth then
// stays below 2k per source, which the slab-qualification gate can match
// against the cached-set capacity, while the selection's lower bound
// (output rank >= k) is window-independent.
constexpr double kAursSchedule = 2.0;

/// Ranked source over a multi-slab: sets [a1, a2] of an internal node's
/// group. Exact size comes from the children's live counts; rank and max
/// queries go through the group (one block read plus an O(lg_B(fl)) rank
/// resolution each).
class MultiSlabSource final : public RankedSource {
  public:
    MultiSlabSource(FlGroup* fl, std::size_t a1, std::size_t a2, std::size_t sz)
        : fl_(fl), a1_(a1), a2_(a2), sz_(sz) {}

    std::size_t size() override { return sz_; }
    Key maxElement() override { return *fl_->maxInRange(a1_, a2_); }
    Key rankSelect(double rho) override { return fl_->query(a1_, a2_, rho); }

  private:
    FlGroup* fl_;
    std::size_t a1_, a2_;
    std::size_t sz_;
};

} // namespace

void SmallkParams::validate() const {
    if (l < 1) throw std::invalid_argument("SmallkParams: l must be >= 1");
    if (c2 < 2) throw std::invalid_argument("SmallkParams: c2 must be >= 2");
    if (c1 < 2.0) throw std::invalid_argument("SmallkParams: c1 must be >= 2");
    // exact-merge fallback for small slab sources needs untruncated G-sets
    // up to c1*l elements per child
    if (c1 > double(c2))
        throw std::invalid_argument("SmallkParams: c1 must not exceed c2");
}

SmallKTree::SmallKTree(BlockStore& store, SmallkParams params,
                       std::vector<Point> points, std::size_t capacityN)
    : store_(&store), params_(params) {
    params_.validate();
    capacityN_ = capacityN ? capacityN : std::max<std::size_t>(2, 2 * points.size());
    gsetCap_ = params_.c2 * params_.l;

    const EmConfig& cfg = store_->config();
    if (params_.branchingOverride) {
        branching_ = params_.branchingOverride;
    } else {
        double lgN = std::log2(double(std::max<std::size_t>(2, capacityN_)));
        branching_ = static_cast<std::size_t>(std::ceil(std::sqrt(double(cfg.B) * lgN)));
        // nodes carry up to 2*branching children; shrink until their group
        // blocks fit the one-block budgets
        while (branching_ > 4 && !FlGroup::fitsBudget(2 * branching_, gsetCap_, cfg))
            --branching_;
    }
    branching_ = std::max<std::size_t>(branching_, 4);
    if (!FlGroup::fitsBudget(2 * branching_, gsetCap_, cfg))
        throw std::invalid_argument(
            "SmallKTree: no admissible branching fits the group block budget");
    leafCapacity_ = params_.leafCapacityOverride
                        ? params_.leafCapacityOverride
                        : branching_ * params_.l * cfg.B;

    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.x < b.x; });
    std::vector<Key> xs;
    xs.reserve(points.size());
    for (const Point& p : points) {
        if (!xs.empty() && xs.back() == p.x)
            throw std::invalid_argument("SmallKTree: duplicate x");
        xs.push_back(p.x);
    }
    tree_ = std::make_unique<Tree>(*store_, WbbParams{branching_, leafCapacity_});
    tree_->build(xs);
    gScore_ = std::make_unique<OstTree>(*store_);
    for (const Point& p : points) {
        if (!liveScores_.insert(p.y).second)
            throw std::invalid_argument("SmallKTree: duplicate score");
        live_[p.x] = p.y;
        gScore_->insert(p.y, p.x);
    }
    rebuildPayloads(tree_->root(), points);
}

std::vector<Key> SmallKTree::rebuildPayloads(Node* n, std::span<const Point> elems) {
    n->data.liveCount = elems.size();
    if (n->isLeaf()) {
        n->data.fl.reset();
        n->data.xIndex = std::make_unique<OstTree>(*store_);
        n->data.scoreIndex = std::make_unique<OstTree>(*store_);
        std::vector<Key> scores;
        scores.reserve(elems.size());
        for (const Point& p : elems) {
            n->data.xIndex->insert(p.x, p.y);
            n->data.scoreIndex->insert(p.y, p.x);
            scores.push_back(p.y);
        }
        std::sort(scores.rbegin(), scores.rend());
        if (scores.size() > gsetCap_) scores.resize(gsetCap_);
        return scores;
    }
    n->data.xIndex.reset();
    n->data.scoreIndex.reset();
    n->data.fl = std::make_unique<FlGroup>(
        *store_, FlParams{n->children.size(), gsetCap_});
    std::vector<Key> merged;
    std::size_t at = 0;
    for (std::size_t j = 0; j < n->children.size(); ++j) {
        std::size_t hi = elems.size();
        if (j + 1 < n->children.size()) {
            Key bound = n->children[j + 1]->xLow;
            hi = at;
            while (hi < elems.size() && elems[hi].x < bound) ++hi;
        }
        auto g = rebuildPayloads(n->children[j].get(), elems.subspan(at, hi - at));
        for (Key v : g) n->data.fl->insert(j + 1, v);
        merged.insert(merged.end(), g.begin(), g.end());
        at = hi;
    }
    std::sort(merged.rbegin(), merged.rend());
    if (merged.size() > gsetCap_) merged.resize(gsetCap_);
    return merged;
}

void SmallKTree::collectLiveUnder(Node* n, std::vector<Point>& out) {
    if (n->isLeaf()) {
        if (n->data.xIndex)
            for (const auto& e : n->data.xIndex->collectAll())
                out.push_back({e.key, e.aux});
        return;
    }
    for (auto& c : n->children) collectLiveUnder(c.get(), out);
}

std::size_t SmallKTree::indexOfChild(Node* u, Node* child) const {
    for (std::size_t j = 0; j < u->children.size(); ++j)
        if (u->children[j].get() == child) return j;
    throw std::logic_error("SmallKTree: child not found under parent");
}

/// Bottom-up G-set propagation of a freshly inserted score: walk parent
/// pairs from startPair upward; at each step the score is already present
/// in the child's structures, and it belongs to G(child) iff its rank
/// there is within the cap. Stops at the first level it misses.
void SmallKTree::bubbleInsert(const std::vector<Node*>& path, std::size_t startPair,
                              Key score) {
    for (std::size_t d = startPair; d >= 1; --d) {
        Node* child = path[d];
        Node* u = path[d - 1];
        std::size_t rank = child->isLeaf()
                               ? child->data.scoreIndex->rankDesc(score)
                               : child->data.fl->globalRankDesc(score);
        if (rank > gsetCap_) break;
        std::size_t i = indexOfChild(u, child) + 1;
        std::size_t target = std::min(gsetCap_, child->data.liveCount);
        std::size_t cur = u->data.fl->setSize(i);
        if (cur == target) {
            Key low = u->data.fl->setSelectDesc(i, cur);
            u->data.fl->erase(i, low);
        }
        u->data.fl->insert(i, score);
    }
}

void SmallKTree::insert(Point p) {
    if (live_.count(p.x))
        throw std::invalid_argument("SmallKTree::insert: duplicate x");
    if (liveScores_.count(p.y))
        throw std::invalid_argument("SmallKTree::insert: duplicate score");
    // a dead x-coordinate (erased earlier) is still a base-tree key; reuse it
    Node* keyLeaf = tree_->locateLeaf(p.x);
    bool deadKey =
        std::binary_search(keyLeaf->keys.begin(), keyLeaf->keys.end(), p.x);
    std::optional<Tree::RebalanceReport> report;
    if (!deadKey) report = tree_->insertKey(p.x);
    live_[p.x] = p.y;
    liveScores_.insert(p.y);
    gScore_->insert(p.y, p.x);

    Node* rebuilt = nullptr;
    if (report) {
        Node* at = report->rebuildAt;
        std::vector<Point> elems;
        collectLiveUnder(at, elems);
        elems.push_back(p);
        std::sort(elems.begin(), elems.end(),
                  [](const Point& a, const Point& b) { return a.x < b.x; });
        rebuilt = tree_->rebuildSubtree(at);
        rebuildPayloads(rebuilt, elems);
        ++counters_.rebuilds;
    }

    auto path = tree_->locatePath(p.x);
    std::size_t boundary = path.size(); // first index handled by the rebuild
    if (rebuilt) {
        boundary = 0;
        while (path[boundary] != rebuilt) ++boundary;
    }
    for (std::size_t i = 0; i < boundary; ++i) ++path[i]->data.liveCount;

    if (!rebuilt) {
        Node* leaf = path.back();
        leaf->data.xIndex->insert(p.x, p.y);
        leaf->data.scoreIndex->insert(p.y, p.x);
        bubbleInsert(path, path.size() - 1, p.y);
    } else if (boundary >= 1) {
        bubbleInsert(path, boundary, p.y);
    }
}

void SmallKTree::erase(Point p) {
    auto it = live_.find(p.x);
    if (it == live_.end() || it->second != p.y)
        throw std::invalid_argument("SmallKTree::erase: element not live");
    auto path = tree_->locatePath(p.x);
    for (Node* n : path) --n->data.liveCount;
    Node* leaf = path.back();
    leaf->data.xIndex->erase(p.x);
    leaf->data.scoreIndex->erase(p.y);
    live_.erase(it);
    liveScores_.erase(p.y);
    gScore_->erase(p.y);

    for (std::size_t d = path.size() - 1; d >= 1; --d) {
        Node* child = path[d];
        Node* u = path[d - 1];
        std::size_t i = indexOfChild(u, child) + 1;
        if (!u->data.fl->setContains(i, p.y)) break;
        u->data.fl->erase(i, p.y);
        if (child->data.liveCount >= gsetCap_) {
            // refill with the subtree's new rank-(c2 l) score: the child's
            // own structures are already fixed, so its top group/leaf ranks
            // are exact up to the cap
            Key fill = child->isLeaf()
                           ? child->data.scoreIndex->selectDesc(gsetCap_).key
                           : child->data.fl->globalSelectDesc(gsetCap_);
            u->data.fl->insert(i, fill);
        }
    }
}

std::optional<Point> SmallKTree::selectApprox(Key x1, Key x2, std::size_t k) {
    if (x1 > x2)
        throw std::invalid_argument("SmallKTree::selectApprox: x1 > x2");
    if (k < 1 || k > params_.l)
        throw std::invalid_argument("SmallKTree::selectApprox: k outside [1, l]");

    auto ranges = tree_->canonicalRanges(x1, x2);
    std::vector<Key> pool; // exactly merged scores: boundary leaves + small slabs
    std::vector<std::unique_ptr<MultiSlabSource>> big;
    for (const auto& r : ranges) {
        if (r.isLeafRange) {
            if (r.node->data.xIndex)
                for (const auto& e : r.node->data.xIndex->collectRange(x1, x2))
                    pool.push_back(e.aux);
            continue;
        }
        std::size_t sz = 0;
        for (std::size_t j = r.childLo; j <= r.childHi; ++j)
            sz += r.node->children[j]->data.liveCount;
        if (sz == 0) continue;
        FlGroup* fl = r.node->data.fl.get();
        // A slab may feed union-rank selection only when the group-backed
        // rank operator is sound at every probe depth (< 2k per round):
        // the slab must hold >= c1*k elements, and the deepest certified
        // window (kSketchRatio * 2k) must stay within the cached-set
        // capacity, where group ranks equal true subtree ranks.
        bool aursOk =
            double(sz) >= params_.c1 * double(k) &&
            double(kSketchRatio) * kAursSchedule * double(k) <= double(gsetCap_);
        if (!aursOk) {
            // merged exactly instead: the top min(c2*l, .) scores per child
            // are cached, and only ranks <= c2*l matter for k <= l
            ++counters_.exactFallbacks;
            for (std::size_t j = r.childLo; j <= r.childHi; ++j)
                for (Key v : fl->collectSetDesc(j + 1)) pool.push_back(v);
        } else {
            big.push_back(std::make_unique<MultiSlabSource>(fl, r.childLo + 1,
                                                            r.childHi + 1, sz));
        }
    }

    Key fromAurs = kNegInfKey;
    if (!big.empty()) {
        std::vector<RankedSource*> srcs;
        for (auto& s : big) srcs.push_back(s.get());
        fromAurs = aursSelect(srcs, k, kAursSchedule, &aursStats_);
        ++counters_.aursRuns;
    }
    Key fromPool = kNegInfKey;
    if (pool.size() >= k) {
        std::nth_element(pool.begin(), pool.begin() + (k - 1), pool.end(),
                         std::greater<Key>());
        fromPool = pool[k - 1];
    }
    Key best = std::max(fromAurs, fromPool);
    if (best == kNegInfKey) return std::nullopt; // fewer than k in range
    auto e = gScore_->find(best);
    return Point{e->aux, best};
}

bool SmallKTree::auditInvariants(std::string* why) {
    return auditNode(tree_->root(), 0, kMaxKey, why);
}

bool SmallKTree::auditNode(Node* n, Key slabLo, Key slabHi, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) {
            std::ostringstream os;
            os << msg << " (slab [" << slabLo << ", " << slabHi << "))";
            *why = os.str();
        }
        return false;
    };
    // oracle: live elements with x in [slabLo, slabHi)
    std::vector<Point> oracle;
    for (auto it = live_.lower_bound(slabLo); it != live_.end() && it->first < slabHi;
         ++it)
        oracle.push_back({it->first, it->second});
    if (n->data.liveCount != oracle.size()) return fail("live count mismatch");

    if (n->isLeaf()) {
        if (!n->data.xIndex || !n->data.scoreIndex) return fail("missing leaf index");
        auto got = n->data.xIndex->collectAll();
        if (got.size() != oracle.size()) return fail("leaf x-index size mismatch");
        for (std::size_t i = 0; i < got.size(); ++i)
            if (got[i].key != oracle[i].x || got[i].aux != oracle[i].y)
                return fail("leaf x-index content mismatch");
        if (n->data.scoreIndex->size() != oracle.size())
            return fail("leaf score-index size mismatch");
        for (const Point& p : oracle) {
            auto e = n->data.scoreIndex->find(p.y);
            if (!e || e->aux != p.x) return fail("leaf score-index content mismatch");
        }
        return true;
    }

    if (!n->data.fl) return fail("missing group structure");
    if (n->data.fl->params().f != n->children.size())
        return fail("group set count != children");
    std::string flWhy;
    if (!n->data.fl->auditConsistent(&flWhy)) return fail("group audit: " + flWhy);
    for (std::size_t j = 0; j < n->children.size(); ++j) {
        Node* c = n->children[j].get();
        Key cLo = j == 0 ? slabLo : c->xLow;
        Key cHi = j + 1 < n->children.size() ? n->children[j + 1]->xLow : slabHi;
        std::vector<Key> scores;
        for (auto it = live_.lower_bound(cLo); it != live_.end() && it->first < cHi;
             ++it)
            scores.push_back(it->second);
        std::sort(scores.rbegin(), scores.rend());
        if (scores.size() > gsetCap_) scores.resize(gsetCap_);
        auto got = n->data.fl->collectSetDesc(j + 1);
        if (got != scores) return fail("G-set mismatch at child " + std::to_string(j));
        if (!auditNode(c, cLo, cHi, why)) return false;
    }
    return true;
}

} // namespace emtopk
