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

#include "emtopk/topk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emtopk {

namespace {

std::size_t ceilLg(std::size_t n) {
    std::size_t lg = 0;
    while ((std::size_t{1} << lg) < n) ++lg;
    return std::max<std::size_t>(lg, 1);
}

} // namespace

TopkIndex::TopkIndex(BlockStore& store, SmallkParams smallkParams,
                     std::vector<Point> points)
    : store_(&store), skParams_(smallkParams) {
    skParams_.validate();
    xCount_ = std::make_unique<OstTree>(*store_);
    for (const Point& p : points) {
        if (live_.count(p.x)) throw std::invalid_argument("TopkIndex: duplicate x");
        live_[p.x] = p.y;
        xCount_->insert(p.x, p.y);
    }
    rebuildAll();
    counters_.rebuilds = 0; // construction is not a rebuild event
}

void TopkIndex::rebuildAll() {
    std::vector<Point> pts;
    pts.reserve(live_.size());
    for (const auto& [x, y] : live_) pts.push_back({x, y});
    baseN_ = pts.size();
    std::size_t n = std::max<std::size_t>(2, baseN_);
    std::size_t capacity = 2 * n; // frozen until the next rebuild
    pst_ = std::make_unique<BigkPst>(*store_, pts);
    pst_->setLogBound(ceilLg(capacity));
    smallk_ = std::make_unique<SmallKTree>(*store_, skParams_, pts, capacity);
    kThreshold_ = store_->B() * ceilLg(n);
    ++counters_.rebuilds;
}

void TopkIndex::maybeRebuild() {
    std::size_t n = live_.size();
    if (n >= 2 * std::max<std::size_t>(1, baseN_) || (baseN_ >= 2 && n <= baseN_ / 2))
        rebuildAll();
}

void TopkIndex::insert(Point p) {
    if (live_.count(p.x)) throw std::invalid_argument("TopkIndex::insert: duplicate x");
    pst_->insert(p);
    smallk_->insert(p);
    xCount_->insert(p.x, p.y);
    live_[p.x] = p.y;
    maybeRebuild();
}

void TopkIndex::erase(Point p) {
    auto it = live_.find(p.x);
    if (it == live_.end() || it->second != p.y)
        throw std::invalid_argument("TopkIndex::erase: element not live");
    pst_->erase(p);
    smallk_->erase(p);
    xCount_->erase(p.x);
    live_.erase(it);
    maybeRebuild();
}

std::vector<Point> TopkIndex::queryTopk(Key x1, Key x2, std::size_t k) {
    if (x1 > x2) throw std::invalid_argument("TopkIndex::queryTopk: x1 > x2");
    if (k < 1) throw std::invalid_argument("TopkIndex::queryTopk: k must be >= 1");
    std::size_t hits = xCount_->countInRange(x1, x2);
    if (hits == 0) return {};
    std::size_t kk = std::min(k, hits);

    if (kk >= kThreshold_ || kk > skParams_.l) {
        ++counters_.pathLarge;
        return pst_->queryTopk(x1, x2, kk);
    }

    ++counters_.pathSmall;
    Key cutoff = kNegInfKey;
    if (hits <= kk) {
        // the whole range qualifies; no selection needed
        ++counters_.sparseFallbacks;
    } else {
        auto e = smallk_->selectApprox(x1, x2, kk);
        if (e) {
            cutoff = e->y;
        } else {
            ++counters_.sparseFallbacks; // unreachable given hits > kk; stay safe
        }
    }
    auto cands = pst_->report3Sided(x1, x2, cutoff);
    std::sort(cands.begin(), cands.end(),
              [](const Point& a, const Point& b) { return a.y > b.y; });
    if (cands.size() > kk) cands.resize(kk);
    return cands;
}

} // namespace emtopk
