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

#include "emtopk/fl_group.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "emtopk/bits.hpp"

namespace emtopk {

double logB(double x, double B) {
    return std::max(1.0, std::log(x) / std::log(B));
}

namespace {

struct PrefixFieldBits {
    unsigned count;
    unsigned global;
    unsigned local;
};

PrefixFieldBits prefixFieldBits(std::size_t f, std::size_t l, std::size_t p) {
    return PrefixFieldBits{
        ceilLog2(p + 1),
        ceilLog2(std::max<std::size_t>(2, f * l)),
        ceilLog2(std::max<std::size_t>(2, l)),
    };
}

} // namespace

CompressedPrefixSet CompressedPrefixSet::empty(std::size_t f, std::size_t l,
                                               std::size_t p) {
    CompressedPrefixSet c;
    c.f = f;
    c.l = l;
    c.p = p;
    c.sets.assign(f, {});
    return c;
}

std::size_t CompressedPrefixSet::packedBits() const {
    auto fb = prefixFieldBits(f, l, p);
    std::size_t bits = 0;
    for (const auto& s : sets) bits += fb.count + s.size() * (fb.global + fb.local);
    return bits;
}

std::size_t CompressedPrefixSet::worstCaseBits(std::size_t f, std::size_t l,
                                               std::size_t p) {
    auto fb = prefixFieldBits(f, l, p);
    return f * (fb.count + p * (fb.global + fb.local));
}

std::vector<Word> CompressedPrefixSet::pack() const {
    auto fb = prefixFieldBits(f, l, p);
    BitWriter w;
    for (const auto& s : sets) {
        w.put(s.size(), fb.count);
        for (const auto& e : s) {
            assert(e.globalRank >= 1 && e.localRank >= 1);
            w.put(e.globalRank - 1, fb.global);
            w.put(e.localRank - 1, fb.local);
        }
    }
    return w.words();
}

CompressedPrefixSet CompressedPrefixSet::unpack(std::span<const Word> words,
                                                std::size_t f, std::size_t l,
                                                std::size_t p) {
    auto fb = prefixFieldBits(f, l, p);
    CompressedPrefixSet c = empty(f, l, p);
    BitReader r(words.data(), words.size() * 64);
    for (std::size_t i = 0; i < f; ++i) {
        std::size_t cnt = r.get(fb.count);
        for (std::size_t j = 0; j < cnt; ++j) {
            PivotRanks e;
            e.globalRank = static_cast<std::uint32_t>(r.get(fb.global)) + 1;
            e.localRank = static_cast<std::uint32_t>(r.get(fb.local)) + 1;
            c.sets[i].push_back(e);
        }
    }
    return c;
}

bool FlGroup::fitsBudget(std::size_t f, std::size_t l, const EmConfig& cfg) {
    if (f < 1 || l < 1) return false;
    std::size_t p = static_cast<std::size_t>(
        std::ceil(std::sqrt(double(cfg.B)) * logB(double(f) * double(l), double(cfg.B))));
    p = std::max<std::size_t>(std::min(p, l), 1);
    std::size_t budget = cfg.blockBits();
    std::size_t sketchBits = std::max(CompressedSketchSet::worstCaseBits(f, l),
                                      CompressedSketchSet::budgetFormulaBits(f, l));
    return sketchBits <= budget &&
           CompressedPrefixSet::worstCaseBits(f, l, p) <= budget;
}

FlGroup::FlGroup(BlockStore& store, FlParams params)
    : store_(&store), params_(params) {
    if (params_.f < 1 || params_.l < 1)
        throw std::invalid_argument("FlGroup: f and l must be >= 1");
    const EmConfig& cfg = store_->config();
    double fl = double(params_.f) * double(params_.l);
    p_ = static_cast<std::size_t>(
        std::ceil(std::sqrt(double(cfg.B)) * logB(fl, double(cfg.B))));
    p_ = std::min(p_, params_.l);
    p_ = std::max<std::size_t>(p_, 1);

    std::size_t budget = cfg.blockBits();
    std::size_t sketchBits =
        std::max(CompressedSketchSet::worstCaseBits(params_.f, params_.l),
                 CompressedSketchSet::budgetFormulaBits(params_.f, params_.l));
    if (sketchBits > budget)
        throw std::invalid_argument("FlGroup: sketch set exceeds one-block budget");
    if (CompressedPrefixSet::worstCaseBits(params_.f, params_.l, p_) > budget)
        throw std::invalid_argument("FlGroup: prefix set exceeds one-block budget");

    css_ = CompressedSketchSet::empty(params_.f, params_.l);
    cps_ = CompressedPrefixSet::empty(params_.f, params_.l, p_);
    maxima_.assign(params_.f, kNegInfKey);
    gTree_ = std::make_unique<OstTree>(*store_);
    for (std::size_t i = 0; i < params_.f; ++i)
        setTrees_.push_back(std::make_unique<OstTree>(*store_));

    sketchBlock_ = store_->alloc();
    prefixBlock_ = store_->alloc();
    std::size_t maxBlocks = (params_.f + cfg.B - 1) / cfg.B;
    for (std::size_t i = 0; i < maxBlocks; ++i) maxBlocks_.push_back(store_->alloc());
    writeSketch();
    writePrefix();
    writeMaxima();
}

void FlGroup::checkIndex(std::size_t i) const {
    if (i < 1 || i > params_.f)
        throw std::invalid_argument("FlGroup: set index out of range");
}

std::size_t FlGroup::setSize(std::size_t i) const {
    checkIndex(i);
    return css_.sizes[i - 1];
}

void FlGroup::writeSketch() {
    std::vector<Word> words = css_.pack();
    if (words.empty()) words.push_back(0);
    store_->writeWords(std::span<const BlockId>(&sketchBlock_, 1), words);
}

void FlGroup::writePrefix() {
    std::vector<Word> words = cps_.pack();
    if (words.empty()) words.push_back(0);
    store_->writeWords(std::span<const BlockId>(&prefixBlock_, 1), words);
}

void FlGroup::writeMaxima() {
    store_->writeWords(maxBlocks_, maxima_);
}

Key FlGroup::query(std::size_t a1, std::size_t a2, double k) {
    checkIndex(a1);
    checkIndex(a2);
    if (a1 > a2) throw std::invalid_argument("FlGroup::query: a1 > a2");
    std::size_t unionSize = 0;
    for (std::size_t i = a1 - 1; i <= a2 - 1; ++i) unionSize += css_.sizes[i];
    if (k < 1 || k > double(unionSize))
        throw std::invalid_argument("FlGroup::query: k outside [1, union size]");
    store_->read(sketchBlock_);
    auto g = compressedUnionSelect(css_, a1 - 1, a2 - 1, k);
    if (!g) return kNegInfKey;
    return gTree_->selectDesc(*g).key;
}

std::optional<Key> FlGroup::maxInRange(std::size_t a1, std::size_t a2) {
    checkIndex(a1);
    checkIndex(a2);
    if (a1 > a2) throw std::invalid_argument("FlGroup::maxInRange: a1 > a2");
    for (BlockId id : maxBlocks_) store_->read(id);
    std::optional<Key> best;
    for (std::size_t i = a1 - 1; i <= a2 - 1; ++i)
        if (maxima_[i] != kNegInfKey && (!best || maxima_[i] > *best))
            best = maxima_[i];
    return best;
}

std::optional<std::uint32_t> FlGroup::prefixLookup(std::size_t i, std::size_t r) {
    checkIndex(i);
    if (r < 1) throw std::invalid_argument("FlGroup::prefixLookup: r must be >= 1");
    store_->read(prefixBlock_);
    const auto& P = cps_.sets[i - 1];
    if (r > P.size()) return std::nullopt;
    return P[r - 1].globalRank;
}

void FlGroup::repairInvalidatedPivots(std::size_t idx) {
    std::size_t size = css_.sizes[idx];
    auto& S = css_.sets[idx];
    for (std::size_t j = 1; j <= S.size(); ++j) {
        std::size_t lo = std::size_t{1} << (j - 1);
        std::size_t hi = (std::size_t{1} << j) - 1;
        std::size_t lr = S[j - 1].localRank;
        if (lr >= lo && lr <= hi) continue;
        std::size_t target = pivotHomeRank(j, size);
        // Small windows are repaired from the prefix block (already read by
        // the enclosing update); larger ones need index walks.
        if ((std::size_t{1} << j) < p_ && target <= cps_.sets[idx].size()) {
            S[j - 1] = PivotRanks{cps_.sets[idx][target - 1].globalRank,
                                  static_cast<std::uint32_t>(target)};
        } else {
            Key v = setTrees_[idx]->selectDesc(target).key;
            std::uint32_t g = static_cast<std::uint32_t>(gTree_->rankDesc(v));
            S[j - 1] = PivotRanks{g, static_cast<std::uint32_t>(target)};
        }
    }
}

void FlGroup::insert(std::size_t i, Key e) {
    checkIndex(i);
    std::size_t idx = i - 1;
    if (e == kNegInfKey)
        throw std::invalid_argument("FlGroup::insert: reserved sentinel value");
    if (css_.sizes[idx] >= params_.l)
        throw std::invalid_argument("FlGroup::insert: set is full");
    if (gTree_->contains(e))
        throw std::invalid_argument("FlGroup::insert: duplicate value");

    std::uint32_t rNew = static_cast<std::uint32_t>(gTree_->rankDesc(e) + 1);
    std::uint32_t rLoc = static_cast<std::uint32_t>(setTrees_[idx]->rankDesc(e) + 1);
    gTree_->insert(e, idx);
    setTrees_[idx]->insert(e, 0);

    // Prefix block first: pivot repairs below read post-update prefixes.
    store_->read(prefixBlock_);
    for (std::size_t s = 0; s < params_.f; ++s)
        for (auto& pr : cps_.sets[s]) {
            if (pr.globalRank >= rNew) ++pr.globalRank;
            if (s == idx && pr.localRank >= rLoc) ++pr.localRank;
        }
    if (rLoc <= p_) {
        auto& P = cps_.sets[idx];
        P.insert(P.begin() + (rLoc - 1), PivotRanks{rNew, rLoc});
        if (P.size() > std::min(p_, std::size_t(css_.sizes[idx]) + 1)) P.pop_back();
    }
    writePrefix();

    store_->read(sketchBlock_);
    for (std::size_t s = 0; s < params_.f; ++s)
        for (auto& pr : css_.sets[s]) {
            if (pr.globalRank >= rNew) ++pr.globalRank;
            if (s == idx && pr.localRank >= rLoc) ++pr.localRank;
        }
    ++css_.sizes[idx];
    std::size_t size = css_.sizes[idx];
    if (sketchLength(size) > css_.sets[idx].size()) {
        // |G_i| reached a power of two: the new pivot is the set minimum.
        Key mn = setTrees_[idx]->selectAsc(1).key;
        std::uint32_t g = static_cast<std::uint32_t>(gTree_->rankDesc(mn));
        css_.sets[idx].push_back(PivotRanks{g, static_cast<std::uint32_t>(size)});
    }
    repairInvalidatedPivots(idx);
    writeSketch();

    if (maxima_[idx] == kNegInfKey || e > maxima_[idx]) {
        maxima_[idx] = e;
        writeMaxima();
    }
}

void FlGroup::erase(std::size_t i, Key e) {
    checkIndex(i);
    std::size_t idx = i - 1;
    if (!setTrees_[idx]->contains(e))
        throw std::invalid_argument("FlGroup::erase: value not in set");

    std::uint32_t rOld = static_cast<std::uint32_t>(gTree_->rankDesc(e));
    std::uint32_t rLoc = static_cast<std::uint32_t>(setTrees_[idx]->rankDesc(e));
    gTree_->erase(e);
    setTrees_[idx]->erase(e);
    std::size_t newSize = css_.sizes[idx] - 1;

    store_->read(prefixBlock_);
    auto& P = cps_.sets[idx];
    bool inPrefix = rLoc <= P.size();
    if (inPrefix) P.erase(P.begin() + (rLoc - 1));
    for (std::size_t s = 0; s < params_.f; ++s)
        for (auto& pr : cps_.sets[s]) {
            if (pr.globalRank > rOld) --pr.globalRank;
            if (s == idx && pr.localRank > rLoc) --pr.localRank;
        }
    std::size_t want = std::min(p_, newSize);
    if (P.size() < want) {
        // Backfill the freed slot with the current rank-want element.
        Key v = setTrees_[idx]->selectDesc(want).key;
        std::uint32_t g = static_cast<std::uint32_t>(gTree_->rankDesc(v));
        P.push_back(PivotRanks{g, static_cast<std::uint32_t>(want)});
    }
    writePrefix();

    store_->read(sketchBlock_);
    auto& S = css_.sets[idx];
    for (auto& pr : S)
        if (pr.localRank == rLoc && pr.globalRank == rOld)
            pr = PivotRanks{0, 0}; // dangling: forced through repair below
    for (std::size_t s = 0; s < params_.f; ++s)
        for (auto& pr : css_.sets[s]) {
            if (pr.globalRank > rOld) --pr.globalRank;
            if (s == idx && pr.localRank > rLoc) --pr.localRank;
        }
    css_.sizes[idx] = static_cast<std::uint32_t>(newSize);
    S.resize(sketchLength(newSize));
    repairInvalidatedPivots(idx);
    writeSketch();

    if (e == maxima_[idx]) {
        maxima_[idx] = setTrees_[idx]->empty() ? kNegInfKey
                                               : setTrees_[idx]->selectDesc(1).key;
        writeMaxima();
    }
}

Key FlGroup::globalSelectDesc(std::size_t rank) {
    if (rank < 1 || rank > gTree_->size())
        throw std::invalid_argument("FlGroup::globalSelectDesc: rank out of range");
    return gTree_->selectDesc(rank).key;
}

std::size_t FlGroup::globalRankDesc(Key v) { return gTree_->rankDesc(v); }

bool FlGroup::setContains(std::size_t i, Key v) {
    checkIndex(i);
    return setTrees_[i - 1]->contains(v);
}

Key FlGroup::setSelectDesc(std::size_t i, std::size_t localRank) {
    checkIndex(i);
    if (localRank < 1 || localRank > setTrees_[i - 1]->size())
        throw std::invalid_argument("FlGroup::setSelectDesc: rank out of range");
    return setTrees_[i - 1]->selectDesc(localRank).key;
}

std::vector<Key> FlGroup::collectSetDesc(std::size_t i) {
    checkIndex(i);
    auto entries = setTrees_[i - 1]->collectAll();
    std::vector<Key> out;
    out.reserve(entries.size());
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
        out.push_back(it->key);
    return out;
}

bool FlGroup::auditConsistent(std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };

    // Packed blocks must round-trip to the in-memory mirrors.
    {
        const Block& b = store_->read(sketchBlock_);
        auto decoded = CompressedSketchSet::unpack(b.words, params_.f, params_.l);
        if (!(decoded == css_)) return fail("sketch block does not match mirror");
        const Block& pb = store_->read(prefixBlock_);
        auto pdec = CompressedPrefixSet::unpack(pb.words, params_.f, params_.l, p_);
        if (!(pdec == cps_)) return fail("prefix block does not match mirror");
        std::vector<Word> mw = store_->readWords(maxBlocks_, params_.f);
        for (std::size_t i = 0; i < params_.f; ++i)
            if (mw[i] != maxima_[i]) return fail("maxima block does not match mirror");
    }

    std::size_t total = 0;
    for (std::size_t idx = 0; idx < params_.f; ++idx) {
        std::ostringstream at;
        at << "set " << (idx + 1) << ": ";
        OstTree& T = *setTrees_[idx];
        std::size_t size = css_.sizes[idx];
        total += size;
        if (T.size() != size) return fail(at.str() + "size mismatch with index");
        if (css_.sets[idx].size() != sketchLength(size))
            return fail(at.str() + "wrong sketch length");

        Key expectMax = T.empty() ? kNegInfKey : T.selectDesc(1).key;
        if (maxima_[idx] != expectMax) return fail(at.str() + "stale maximum");

        for (std::size_t j = 1; j <= css_.sets[idx].size(); ++j) {
            const PivotRanks& pr = css_.sets[idx][j - 1];
            std::size_t lo = std::size_t{1} << (j - 1);
            if (pr.localRank < lo || pr.localRank >= 2 * lo)
                return fail(at.str() + "pivot outside its rank window");
            Key local = T.selectDesc(pr.localRank).key;
            if (pr.globalRank < 1 || pr.globalRank > gTree_->size())
                return fail(at.str() + "pivot global rank out of range");
            Key global = gTree_->selectDesc(pr.globalRank).key;
            if (local != global) return fail(at.str() + "pivot rank pair inconsistent");
        }

        const auto& P = cps_.sets[idx];
        if (P.size() != std::min(p_, size))
            return fail(at.str() + "wrong prefix length");
        for (std::size_t r = 1; r <= P.size(); ++r) {
            if (P[r - 1].localRank != r)
                return fail(at.str() + "prefix local ranks not 1..count");
            Key local = T.selectDesc(r).key;
            if (P[r - 1].globalRank < 1 || P[r - 1].globalRank > gTree_->size())
                return fail(at.str() + "prefix global rank out of range");
            Key global = gTree_->selectDesc(P[r - 1].globalRank).key;
            if (local != global) return fail(at.str() + "prefix rank pair inconsistent");
        }
    }
    if (gTree_->size() != total) return fail("global index size mismatch");
    return true;
}

} // namespace emtopk
