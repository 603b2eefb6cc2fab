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

#include "emtopk/aurs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emtopk {

Marker weightedSelect(std::span<const Marker> pivots, double k) {
    std::vector<Marker> sorted(pivots.begin(), pivots.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Marker& a, const Marker& b) { return a.value > b.value; });
    double cum = 0;
    for (const Marker& p : sorted) {
        cum += static_cast<double>(p.weight);
        if (cum >= k) return p;
    }
    throw std::logic_error("weightedSelect: no pivot reaches prefix weight k");
}

namespace {

// Core algorithm for k >= m over the given active subset of sources.
Key roundsSelect(std::span<RankedSource* const> sources,
                 const std::vector<std::size_t>& initial, std::size_t k, double c1,
                 AursStats* stats) {
    std::size_t m = initial.size();
    std::size_t rounds = static_cast<std::size_t>(
        std::ceil(std::max(1.0, std::log(double(m)) / std::log(c1)) - 1e-9));
    std::vector<std::size_t> active = initial;
    std::vector<Marker> pivots;
    double prevCeil = 0;
    for (std::size_t j = 1; j <= rounds; ++j) {
        double rho = std::pow(c1, double(j)) * double(k) / double(m);
        double thisCeil = std::ceil(rho);
        std::uint64_t weight = static_cast<std::uint64_t>(
            j == 1 ? thisCeil : thisCeil - prevCeil);
        prevCeil = thisCeil;
        std::vector<Marker> markers;
        for (std::size_t i : active) {
            Key v = sources[i]->rankSelect(rho);
            if (stats) ++stats->rankCalls;
            markers.push_back(Marker{v, weight, i, j});
        }
        std::size_t keep = static_cast<std::size_t>(
            std::ceil(double(m) / std::pow(c1, double(j))));
        keep = std::min(keep, markers.size());
        std::stable_sort(markers.begin(), markers.end(),
                         [](const Marker& a, const Marker& b) { return a.value > b.value; });
        markers.resize(keep);
        active.clear();
        for (const Marker& p : markers) {
            active.push_back(p.source);
            pivots.push_back(p);
        }
    }
    return weightedSelect(pivots, double(k)).value;
}

} // namespace

Key aursSelect(std::span<RankedSource* const> sources, std::size_t k, double c1,
               AursStats* stats) {
    if (c1 < 2) throw std::invalid_argument("aursSelect: c1 must be >= 2");
    if (sources.empty()) throw std::invalid_argument("aursSelect: no sources");
    std::size_t minSize = sources.front()->size();
    for (auto* s : sources) minSize = std::min(minSize, s->size());
    if (k < 1 || double(k) > double(minSize) / c1)
        throw std::invalid_argument("aursSelect: k outside [1, min|L_i|/c1]");

    std::size_t m = sources.size();
    std::vector<std::size_t> all(m);
    for (std::size_t i = 0; i < m; ++i) all[i] = i;

    if (k >= m) return roundsSelect(sources, all, k, c1, stats);

    // k < m: prefilter by per-source maxima, then run on the k survivors.
    std::vector<std::pair<Key, std::size_t>> maxima;
    for (std::size_t i = 0; i < m; ++i) {
        maxima.emplace_back(sources[i]->maxElement(), i);
        if (stats) ++stats->maxCalls;
    }
    std::sort(maxima.begin(), maxima.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    Key kthMax = maxima[k - 1].first;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < k; ++i) active.push_back(maxima[i].second);
    Key v = roundsSelect(sources, active, k, c1, stats);
    return std::max(v, kthMax);
}

} // namespace emtopk
