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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "emtopk/em.hpp"
#include "emtopk/encode.hpp"
#include "emtopk/wbb.hpp"

namespace emtopk {

struct PstBoldNode;

/// Per-base-node payload: the node's secondary slab tree (internal nodes
/// only) and its serialized representative blocks.
struct PstBaseData {
    std::unique_ptr<PstBoldNode> boldRoot;
    std::vector<BlockId> repBlocks;

    PstBaseData();
    PstBaseData(PstBaseData&&) noexcept;
    PstBaseData& operator=(PstBaseData&&) noexcept;
    ~PstBaseData();
};

/// Node of the concatenated tree: either an internal node of some base
/// node's secondary binary tree over its child slabs (lo < hi), or a slab
/// leaf (lo == hi) that bridges to the child's own secondary tree — or,
/// when that child is a base leaf, terminates as a true leaf.
struct PstBoldNode {
    WbbTree<PstBaseData>::Node* host = nullptr; // base node owning this slab tree
    std::size_t lo = 0, hi = 0;                 // covered child range of host
    PstBoldNode* parent = nullptr;
    std::unique_ptr<PstBoldNode> left, right;
    Key slabLo = 0, slabHi = kMaxKey; // x-range [slabLo, slabHi); kMaxKey = +inf

    std::vector<Point> pilot; // sorted by y descending; mirror of pilotBlocks
    std::vector<BlockId> pilotBlocks;
    long long insTokens = 0, delTokens = 0; // audit-only ledger

    bool isSlabLeaf() const { return lo == hi; }
    bool pilotEmpty() const { return pilot.empty(); }
    /// Representative = lowest pilot point. Pilot must be nonempty.
    const Point& rep() const { return pilot.back(); }
};

/// Audit outcome: first violation found, or a pass.
struct PstAudit {
    bool ok = true;
    std::string message;
    std::size_t boldNodes = 0;
    std::size_t pilotPoints = 0;
};

/// Operation counters for amortization tests.
struct PstCounters {
    std::uint64_t pushDowns = 0;
    std::uint64_t pullUps = 0;
    std::uint64_t drains = 0;
    std::uint64_t rebuilds = 0;
    std::uint64_t demotions = 0;  // point moved parent -> child
    std::uint64_t promotions = 0; // point moved child -> parent
};

/// External priority search tree over (x, score) points for exact top-k
/// range queries with large k.
///
/// The base tree is a weight-balanced B-tree on x with branching and leaf
/// capacity B. Concatenating the per-node binary slab trees yields one
/// big (almost) binary tree; every node carries a "pilot set" of at most
/// 2B points — the highest points of its slab not claimed by an ancestor.
/// Each base node keeps the representatives (lowest pilot point) of its
/// slab-tree nodes in O(1) representative blocks, which is what updates
/// navigate by. Queries cost O(lg n + k/B) I/Os; updates O(lg_B n)
/// amortized via push-downs, pull-ups, and subtree rebuilds. Deleted
/// x-coordinates stay in the base tree; the owning facade prunes them by
/// global rebuilding.
class BigkPst {
  public:
    using BoldNode = PstBoldNode;
    using Tree = WbbTree<PstBaseData>;
    using BaseNode = Tree::Node;

    /// Builds from points with pairwise distinct x and distinct y codes.
    BigkPst(BlockStore& store, std::vector<Point> points);
    ~BigkPst();

    std::size_t liveCount() const { return live_.size(); }
    std::size_t pilotCapacity() const { return 2 * store_->B(); }

    /// ceil(lg n) bound used in the query extraction budget; maintained
    /// by the owner's global rebuilding, not the instantaneous count.
    std::size_t logBound() const { return logBound_; }
    void setLogBound(std::size_t lg) { logBound_ = lg < 1 ? 1 : lg; }

    /// The min(k, hits) highest-scoring points with x in [x1, x2].
    std::vector<Point> queryTopk(Key x1, Key x2, std::size_t k);

    /// All points in [x1, x2] x [yMin, +inf).
    std::vector<Point> report3Sided(Key x1, Key x2, Key yMin);

    void insert(Point p);
    void erase(Point p);

    PstAudit auditInvariants();
    const PstCounters& counters() const { return counters_; }

    /// Uncharged debug view of every live point (audit mirror).
    std::vector<Point> debugLivePoints() const;
    BoldNode* debugBoldRoot() { return boldRoot(); }

  private:
    BoldNode* boldRoot();
    std::vector<BoldNode*> boldChildren(const BoldNode* v) const;
    BoldNode* childContaining(BoldNode* v, Key x) const;
    static bool slabIntersects(const BoldNode* v, Key x1, Key x2);
    static bool slabContained(const BoldNode* v, Key x1, Key x2);

    std::unique_ptr<BoldNode> buildBoldRange(BaseNode* u, std::size_t lo,
                                             std::size_t hi, Key slabLo, Key slabHi);
    void buildBoldRec(BaseNode* u, Key slabLo, Key slabHi);
    void assignLeafPilots(BaseNode* subtree, std::vector<Point> points);
    void fillPilots(BoldNode* v);
    void fillFix(BoldNode* v);

    // pilot-set and representative-block I/O (in-memory mirrors, charged)
    void chargePilotRead(BoldNode* v);
    void writePilot(BoldNode* v);
    void markRepDirty(BoldNode* v);
    void flushRepBlocks();
    void writeRepBlocks(BaseNode* host);
    void chargeRepRead(BaseNode* host);
    template <class Fn>
    void forEachHostNode(BoldNode* v, Fn&& fn);

    bool underflows(const BoldNode* v) const;
    bool pullUp(BoldNode* v); // true on a draining pull-up
    void remedy(BoldNode* v);
    void pushDown(BoldNode* v);
    void clearSubtreeTokens(BoldNode* v);
    void ground(BoldNode* v);
    void rebuildAt(BaseNode* at);
    BoldNode* placementTarget(Point p,
                              std::unordered_set<const BaseNode*>& chargedHosts);
    void collectSubtreePoints(BoldNode* v, std::vector<Point>& out);
    void report3SidedRec(BoldNode* v, Key x1, Key x2, Key yMin,
                         std::vector<Point>& out);
    bool auditNode(BoldNode* v, PstAudit& report, std::size_t depthNonBinary);

    BlockStore* store_;
    std::unique_ptr<Tree> tree_;
    std::unique_ptr<BoldNode> rootLeafBold_; // only while the base root is a leaf
    std::size_t logBound_ = 1;
    std::unordered_map<Key, Key> live_; // x -> y: audit mirror and dup guard
    std::unordered_set<Key> liveY_;
    std::unordered_set<BaseNode*> dirtyHosts_;
    std::unordered_map<const BaseNode*, std::vector<Point>> pendingLeafPoints_;
    PstCounters counters_;
};

} // namespace emtopk
