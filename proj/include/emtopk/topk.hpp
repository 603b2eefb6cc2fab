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
#include <vector>

#include "emtopk/em.hpp"
#include "emtopk/ost_tree.hpp"
#include "emtopk/pst.hpp"
#include "emtopk/smallk.hpp"

namespace emtopk {

struct FacadeCounters {
    std::uint64_t rebuilds = 0;        // global rebuilds
    std::uint64_t pathLarge = 0;       // queries answered by the exact tree
    std::uint64_t pathSmall = 0;       // queries via approximate selection
    std::uint64_t sparseFallbacks = 0; // small path with score cutoff -inf
};

/// Exact dynamic top-k range reporting: the min(k, hits) highest-scoring
/// elements with x in [x1, x2].
///
/// Two structures are maintained side by side. Large k (>= B * ceil(lg n),
/// or beyond the small structure's l) goes straight to the exact
/// priority-search tree. Small k first runs approximate range k-selection
/// for a score cutoff s with between k and O(k) in-range elements above
/// it, reports everything scoring >= s in O(lg n + k/B) I/Os, and selects
/// the top k in memory. Sparse ranges (<= k elements) short-circuit with
/// s = -inf. A global rebuild fires when the live count doubles or halves
/// relative to the last rebuild, pruning dead keys and refreshing the
/// frozen capacity both structures parameterize on.
class TopkIndex {
  public:
    TopkIndex(BlockStore& store, SmallkParams smallkParams,
              std::vector<Point> points = {});

    std::size_t liveCount() const { return live_.size(); }
    std::size_t kThreshold() const { return kThreshold_; }

    std::vector<Point> queryTopk(Key x1, Key x2, std::size_t k);

    void insert(Point p);
    void erase(Point p);

    const FacadeCounters& counters() const { return counters_; }
    BigkPst* bigk() { return pst_.get(); }
    SmallKTree* smallk() { return smallk_.get(); }

  private:
    void rebuildAll();
    void maybeRebuild();

    BlockStore* store_;
    SmallkParams skParams_;
    std::unique_ptr<BigkPst> pst_;
    std::unique_ptr<SmallKTree> smallk_;
    std::unique_ptr<OstTree> xCount_; // live x -> score; in-range counting
    std::map<Key, Key> live_;         // x -> score; rebuild source of truth
    std::size_t baseN_ = 0;           // live count at the last rebuild
    std::size_t kThreshold_ = 1;
    FacadeCounters counters_;
};

} // namespace emtopk
