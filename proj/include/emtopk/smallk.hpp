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

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emtopk/aurs.hpp"
#include "emtopk/em.hpp"
#include "emtopk/fl_group.hpp"
#include "emtopk/ost_tree.hpp"
#include "emtopk/wbb.hpp"

namespace emtopk {

/// Parameters of the small-k selection tree.
struct SmallkParams {
    std::size_t l = 4;  // largest supported query k
    std::size_t c2 = 8; // cached-set capacity factor; G-sets hold c2*l scores
    double c1 = 8.0;    // union-rank selection constant (= the group rank window)
    std::size_t branchingOverride = 0;    // 0: derive sqrt(B lg N), budget-clamped
    std::size_t leafCapacityOverride = 0; // 0: branching * l * B

    void validate() const;
};

struct SmallkCounters {
    std::uint64_t rebuilds = 0;       // weight-triggered subtree rebuilds
    std::uint64_t aursRuns = 0;       // queries that ran union-rank selection
    std::uint64_t exactFallbacks = 0; // slab sources too small for it, merged exactly
};

/// Per-base-node payload: internal nodes carry an (f, c2*l)-group over
/// their children's G-sets; leaves carry x- and score-keyed indexes of
/// their live elements.
struct SmallkData {
    std::unique_ptr<FlGroup> fl;
    std::unique_ptr<OstTree> xIndex;     // x -> score
    std::unique_ptr<OstTree> scoreIndex; // score -> x
    std::size_t liveCount = 0;           // live elements below (excludes dead keys)
};

/// Approximate range k-selection for k <= l in O(lg_B n) I/Os per query
/// and amortized update.
///
/// A weight-balanced B-tree with branching f ~ sqrt(B lg N) and leaf
/// capacity f*l*B partitions the x-axis. Every node u caches G(u), the
/// top c2*l scores of its subtree; an internal node stores its children's
/// G-sets in one (f, c2*l)-group, giving O(lg_B(fl))-I/O approximate rank
/// selection and exact max over any contiguous child range. A query
/// decomposes [x1, x2] into O(lg_f n) multi-slabs plus at most two
/// boundary leaves, runs union-rank selection over the slab sources
/// (small sources and the leaves are merged exactly), and resolves the
/// winning score to its element through a global score index.
class SmallKTree {
  public:
    using Tree = WbbTree<SmallkData>;
    using Node = Tree::Node;

    /// capacityN freezes the N used for the branching parameter; 0 means
    /// max(2, 2 * points.size()). The owner rebuilds when the live count
    /// leaves [capacityN/4, capacityN].
    SmallKTree(BlockStore& store, SmallkParams params, std::vector<Point> points,
               std::size_t capacityN = 0);

    const SmallkParams& params() const { return params_; }
    std::size_t branching() const { return branching_; }
    std::size_t leafCapacity() const { return leafCapacity_; }
    std::size_t gsetCapacity() const { return gsetCap_; }
    std::size_t capacityN() const { return capacityN_; }
    std::size_t liveCount() const { return live_.size(); }

    /// An element of S cap [x1, x2] whose in-range descending score rank
    /// lies in [k, C*k] for a fixed constant C; requires 1 <= k <= l.
    /// nullopt iff the range holds fewer than k elements.
    std::optional<Point> selectApprox(Key x1, Key x2, std::size_t k);

    void insert(Point p);
    void erase(Point p);

    const SmallkCounters& counters() const { return counters_; }
    const AursStats& aursStats() const { return aursStats_; }

    /// Oracle check of every G-set, live count, and leaf index against the
    /// in-memory mirror, plus the per-node group consistency audits.
    bool auditInvariants(std::string* why = nullptr);

    Tree* debugTree() { return tree_.get(); }

  private:
    std::vector<Key> rebuildPayloads(Node* n, std::span<const Point> elems);
    void collectLiveUnder(Node* n, std::vector<Point>& out);
    std::size_t indexOfChild(Node* u, Node* child) const;
    void bubbleInsert(const std::vector<Node*>& path, std::size_t startPair, Key score);
    bool auditNode(Node* n, Key slabLo, Key slabHi, std::string* why);

    BlockStore* store_;
    SmallkParams params_;
    std::size_t capacityN_;
    std::size_t branching_;
    std::size_t leafCapacity_;
    std::size_t gsetCap_; // c2 * l
    std::unique_ptr<Tree> tree_;
    std::unique_ptr<OstTree> gScore_; // score -> x, for answer resolution
    std::map<Key, Key> live_;         // x -> score mirror (audits, rebuild oracle)
    std::set<Key> liveScores_;
    SmallkCounters counters_;
    AursStats aursStats_;
};

} // namespace emtopk
