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
#include <span>
#include <vector>

#include "emtopk/encode.hpp"

namespace emtopk {

/// Abstract ranked source for approximate union-rank selection.
/// Ranks are descending: the largest element has rank 1.
class RankedSource {
  public:
    virtual ~RankedSource() = default;

    /// |L_i|; used only to validate the k <= min|L_i|/c1 precondition.
    virtual std::size_t size() = 0;

    /// Largest element of the source.
    virtual Key maxElement() = 0;

    /// An element whose local rank falls in [rho, W*rho) for the source's
    /// fixed window constant W >= the c1 passed to aursSelect, or
    /// kNegInfKey (valid only when the source holds fewer than W*rho
    /// elements).
    virtual Key rankSelect(double rho) = 0;
};

struct Marker {
    Key value;
    std::uint64_t weight;
    std::size_t source;
    std::size_t round; // 1-based
};

struct AursStats {
    std::size_t maxCalls = 0;
    std::size_t rankCalls = 0;
};

/// Worst-case union-rank window of aursSelect with schedule constant c1
/// over sources whose rank windows are [rho, window*rho):
/// [k, window * c1 * (2 + 2 c1) k]. The lower bound k holds for any
/// window; only the upper constant scales with it.
inline double aursRatioBound(double c1, double window = 0) {
    if (window <= 0) window = c1;
    return window * c1 * (2 + 2 * c1);
}

/// Largest-valued pivot whose prefix weight (total weight of pivots with
/// value >= it) reaches k. Some pivot must qualify.
Marker weightedSelect(std::span<const Marker> pivots, double k);

/// Round-based selection over m sources: an element of the union whose
/// union rank lies in [k, aursRatioBound(c1, W) k] where W is the
/// sources' rank window. Requires c1 >= 2 and 1 <= k <= min_i |L_i| / c1;
/// violations throw rather than clamp.
Key aursSelect(std::span<RankedSource* const> sources, std::size_t k, double c1,
               AursStats* stats = nullptr);

} // namespace emtopk
