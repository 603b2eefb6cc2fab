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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emtopk/em.hpp"
#include "emtopk/ost_tree.hpp"
#include "emtopk/sketch.hpp"

namespace emtopk {

/// Bit-packed top prefixes: for every set, the (global rank, local rank)
/// pairs of its p largest elements, p = ceil(sqrt(B) * lg_B(fl)). Decoded
/// local ranks are always exactly 1..count.
struct CompressedPrefixSet {
    std::size_t f = 0;
    std::size_t l = 0;
    std::size_t p = 0; // per-set prefix capacity
    std::vector<std::vector<PivotRanks>> sets;

    static CompressedPrefixSet empty(std::size_t f, std::size_t l, std::size_t p);
    std::size_t packedBits() const;
    static std::size_t worstCaseBits(std::size_t f, std::size_t l, std::size_t p);
    std::vector<Word> pack() const;
    static CompressedPrefixSet unpack(std::span<const Word> words, std::size_t f,
                                      std::size_t l, std::size_t p);
    bool operator==(const CompressedPrefixSet&) const = default;
};

struct FlParams {
    std::size_t f = 4; // number of sets
    std::size_t l = 8; // per-set capacity
};

/// Dynamic (f,l)-group: f disjoint value sets of at most l elements each,
/// supporting approximate k-selection over any contiguous run of sets in
/// O(lg_B(fl)) I/Os, with O(lg_B(fl)) amortized updates.
///
/// Disk layout: one block holds the compressed sketch set, one block the
/// compressed prefix set, ceil(f/B) blocks the per-set maxima, and the
/// rest is B-tree order-statistic indexes (one per set, one global).
/// A query reads the sketch block, selects in memory, and converts the
/// winning global rank back to a value through the global index.
class FlGroup {
  public:
    FlGroup(BlockStore& store, FlParams params);

    /// True iff the packed sketch and prefix sets of an (f,l)-group fit in
    /// one block each under the given machine configuration.
    static bool fitsBudget(std::size_t f, std::size_t l, const EmConfig& cfg);

    const FlParams& params() const { return params_; }
    std::size_t prefixCapacity() const { return p_; }
    std::size_t setSize(std::size_t i) const;         // i is 1-based
    std::size_t totalSize() const { return gTree_->size(); }

    /// Value whose rank in the union of sets [a1, a2] lies in
    /// [k, kSketchRatio*k), or kNegInfKey (valid only for unions smaller
    /// than 2k). k may be fractional; 1 <= k <= union size required.
    Key query(std::size_t a1, std::size_t a2, double k);

    /// Exact maximum value over sets [a1, a2]; nullopt if all empty.
    std::optional<Key> maxInRange(std::size_t a1, std::size_t a2);

    /// Global rank of the element with local rank r in set i, from one
    /// block read. nullopt when r exceeds the set's current prefix.
    std::optional<std::uint32_t> prefixLookup(std::size_t i, std::size_t r);

    void insert(std::size_t i, Key e);
    void erase(std::size_t i, Key e);

    // rank plumbing for owners (small-k tree): all charged tree walks
    Key globalSelectDesc(std::size_t rank);
    std::size_t globalRankDesc(Key v);
    bool setContains(std::size_t i, Key v);
    Key setSelectDesc(std::size_t i, std::size_t localRank);
    std::vector<Key> collectSetDesc(std::size_t i);

    // uncharged views for tests and audits
    const CompressedSketchSet& debugSketch() const { return css_; }
    const CompressedPrefixSet& debugPrefix() const { return cps_; }

    /// Re-decodes the packed sketch/prefix blocks from the store and
    /// cross-checks them (and every rank they contain) against the
    /// B-tree indexes. Returns false and a reason on the first mismatch.
    bool auditConsistent(std::string* why = nullptr);

  private:
    void writeSketch();
    void writePrefix();
    void writeMaxima();
    void refreshMax(std::size_t idx);
    void repairInvalidatedPivots(std::size_t idx);
    void checkIndex(std::size_t i) const;

    BlockStore* store_;
    FlParams params_;
    std::size_t p_;
    CompressedSketchSet css_;
    CompressedPrefixSet cps_;
    std::vector<Key> maxima_; // kNegInfKey when the set is empty
    std::unique_ptr<OstTree> gTree_;
    std::vector<std::unique_ptr<OstTree>> setTrees_;
    BlockId sketchBlock_;
    BlockId prefixBlock_;
    std::vector<BlockId> maxBlocks_;
};

/// lg_B(x) as used throughout: max(1, log_B x).
double logB(double x, double B);

} // namespace emtopk
