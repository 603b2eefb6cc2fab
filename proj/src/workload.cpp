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

#include "emtopk/workload.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "emtopk/topk.hpp"

namespace emtopk {

namespace {

[[noreturn]] void parseFail(std::size_t line, const std::string& msg) {
    throw std::runtime_error("workload line " + std::to_string(line) + ": " + msg);
}

std::uint64_t parseHex(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(tok, &used, 16);
        if (used != tok.size()) parseFail(line, "trailing characters in '" + tok + "'");
        return v;
    } catch (const std::invalid_argument&) {
        parseFail(line, "not a hexadecimal value: '" + tok + "'");
    } catch (const std::out_of_range&) {
        parseFail(line, "value out of range: '" + tok + "'");
    }
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << v;
    return os.str();
}

} // namespace

std::vector<WorkloadOp> parseWorkload(std::istream& in) {
    std::vector<WorkloadOp> ops;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::istringstream ls(line);
        std::string t;
        if (!(ls >> t) || t[0] == '#') continue;
        if (t.size() != 1) parseFail(lineNo, "unknown op '" + t + "'");
        WorkloadOp op;
        op.type = t[0];
        std::string f1, f2, f3;
        switch (op.type) {
            case 'I':
                if (!(ls >> f1 >> f2)) parseFail(lineNo, "I needs x and score");
                op.a = parseHex(f1, lineNo);
                op.b = parseHex(f2, lineNo);
                break;
            case 'D':
                if (!(ls >> f1)) parseFail(lineNo, "D needs x");
                op.a = parseHex(f1, lineNo);
                break;
            case 'Q':
            case 'S':
                if (!(ls >> f1 >> f2 >> f3))
                    parseFail(lineNo, std::string(1, op.type) + " needs x1, x2, k");
                op.a = parseHex(f1, lineNo);
                op.b = parseHex(f2, lineNo);
                op.k = parseHex(f3, lineNo);
                if (op.a > op.b) parseFail(lineNo, "x1 > x2");
                if (op.k < 1) parseFail(lineNo, "k must be >= 1");
                break;
            default:
                parseFail(lineNo, "unknown op '" + t + "'");
        }
        std::string rest;
        if (ls >> rest && rest[0] != '#')
            parseFail(lineNo, "unexpected token '" + rest + "'");
        ops.push_back(op);
    }
    return ops;
}

void writeWorkload(std::ostream& out, const std::vector<WorkloadOp>& ops) {
    for (const auto& op : ops) {
        switch (op.type) {
            case 'I': out << "I " << hex(op.a) << ' ' << hex(op.b) << '\n'; break;
            case 'D': out << "D " << hex(op.a) << '\n'; break;
            case 'Q':
            case 'S':
                out << op.type << ' ' << hex(op.a) << ' ' << hex(op.b) << ' '
                    << hex(op.k) << '\n';
                break;
            default: throw std::logic_error("writeWorkload: unknown op type");
        }
    }
}

std::vector<WorkloadOp> genWorkload(const GenParams& params) {
    std::mt19937_64 rng(params.seed);
    auto unitDouble = [&] { return double(rng() >> 11) * 0x1.0p-53; };
    std::vector<double> centers;
    if (params.distribution == "clustered") {
        std::size_t nc = 4 + rng() % 5;
        for (std::size_t i = 0; i < nc; ++i) centers.push_back(unitDouble());
    } else if (params.distribution != "uniform") {
        throw std::invalid_argument("genWorkload: unknown distribution '" +
                                    params.distribution + "'");
    }
    auto drawCoord = [&]() -> double {
        if (centers.empty()) return unitDouble();
        double c = centers[rng() % centers.size()];
        return c + (unitDouble() - 0.5) * 0.05;
    };

    unsigned total = params.wInsert + params.wDelete + params.wQuery + params.wSelect;
    if (total == 0) throw std::invalid_argument("genWorkload: all weights zero");

    std::set<Key> usedX, usedScore;
    std::vector<Key> liveX;
    std::vector<WorkloadOp> ops;
    while (ops.size() < params.n) {
        unsigned roll = static_cast<unsigned>(rng() % total);
        WorkloadOp op;
        if (roll < params.wInsert || liveX.empty()) {
            op.type = 'I';
            do op.a = encodeKey(drawCoord());
            while (!usedX.insert(op.a).second);
            do op.b = encodeKey(unitDouble());
            while (!usedScore.insert(op.b).second);
            liveX.push_back(op.a);
        } else if (roll < params.wInsert + params.wDelete) {
            op.type = 'D';
            std::size_t i = rng() % liveX.size();
            op.a = liveX[i];
            liveX[i] = liveX.back();
            liveX.pop_back();
        } else {
            bool isQuery = roll < params.wInsert + params.wDelete + params.wQuery;
            op.type = isQuery ? 'Q' : 'S';
            Key a = encodeKey(drawCoord()), b = encodeKey(drawCoord());
            op.a = std::min(a, b);
            op.b = std::max(a, b);
            if (isQuery) {
                std::size_t cap = std::max<std::size_t>(1, liveX.size());
                op.k = 1 + rng() % std::min<std::size_t>(cap, 256);
            } else {
                op.k = 1 + rng() % std::max<std::size_t>(params.maxSelectK, 1);
            }
        }
        ops.push_back(op);
    }
    return ops;
}

std::optional<Key> Oracle::scoreOf(Key x) const {
    auto it = live_.find(x);
    if (it == live_.end()) return std::nullopt;
    return it->second;
}

std::vector<Key> Oracle::topkScores(Key x1, Key x2, std::uint64_t k) const {
    std::vector<Key> scores;
    for (auto it = live_.lower_bound(x1); it != live_.end() && it->first <= x2; ++it)
        scores.push_back(it->second);
    std::sort(scores.rbegin(), scores.rend());
    if (scores.size() > k) scores.resize(k);
    return scores;
}

std::size_t Oracle::rankInRange(Key x1, Key x2, Key score) const {
    std::size_t r = 0;
    for (auto it = live_.lower_bound(x1); it != live_.end() && it->first <= x2; ++it)
        if (it->second >= score) ++r;
    return r;
}

RunConfig RunConfig::parse(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::string trimmed;
        for (char c : line) {
            if (c == '#') break;
            trimmed += c;
        }
        std::istringstream ls(trimmed);
        std::string kv;
        while (ls >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(lineNo) +
                                         ": expected key=value");
            std::string key = kv.substr(0, eq);
            std::string val = kv.substr(eq + 1);
            try {
                if (key == "B") cfg.em.B = std::stoull(val);
                else if (key == "M") cfg.em.M = std::stoull(val);
                else if (key == "word_bits") cfg.em.wordBits = std::stoull(val);
                else if (key == "seed") cfg.seed = std::stoull(val);
                else if (key == "smallk_l") cfg.smallk.l = std::stoull(val);
                else if (key == "smallk_c2") cfg.smallk.c2 = std::stoull(val);
                else if (key == "smallk_c1") cfg.smallk.c1 = std::stod(val);
                else if (key == "smallk_branching")
                    cfg.smallk.branchingOverride = std::stoull(val);
                else if (key == "smallk_leaf_capacity")
                    cfg.smallk.leafCapacityOverride = std::stoull(val);
                else
                    throw std::runtime_error("config line " + std::to_string(lineNo) +
                                             ": unknown key '" + key + "'");
            } catch (const std::invalid_argument&) {
                throw std::runtime_error("config line " + std::to_string(lineNo) +
                                         ": bad value '" + val + "'");
            }
        }
    }
    return cfg;
}

RunReport runWorkload(const RunConfig& config, const std::vector<WorkloadOp>& ops,
                      const RunOptions& options) {
    BlockStore store(config.em);
    std::unique_ptr<TopkIndex> facade;
    std::unique_ptr<BigkPst> bigk;
    std::unique_ptr<SmallKTree> smallk;
    switch (options.structure) {
        case StructureSel::Facade:
            facade = std::make_unique<TopkIndex>(store, config.smallk);
            break;
        case StructureSel::Bigk:
            bigk = std::make_unique<BigkPst>(store, std::vector<Point>{});
            break;
        case StructureSel::Smallk:
            smallk = std::make_unique<SmallKTree>(store, config.smallk,
                                                  std::vector<Point>{}, 0);
            break;
    }

    Oracle oracle; // doubles as the referential live map for D ops
    RunReport rep;
    double queryIo = 0, updateIo = 0;

    auto audit = [&](std::string* why) {
        if (bigk) {
            auto a = bigk->auditInvariants();
            if (!a.ok && why) *why = a.message;
            return a.ok;
        }
        if (smallk) return smallk->auditInvariants(why);
        auto a = facade->bigk()->auditInvariants();
        if (!a.ok) {
            if (why) *why = a.message;
            return false;
        }
        return facade->smallk()->auditInvariants(why);
    };

    if (options.csv) *options.csv << "op,type,reads,writes,result,mismatch\n";

    for (std::size_t idx = 0; idx < ops.size(); ++idx) {
        const WorkloadOp& op = ops[idx];
        IoStats before = store.statsSnapshot();
        std::size_t resultSize = 0;
        bool mismatch = false;

        switch (op.type) {
            case 'I': {
                if (oracle.scoreOf(op.a))
                    throw std::runtime_error("op " + std::to_string(idx) +
                                             ": insert of live x");
                Point p{op.a, op.b};
                if (facade) facade->insert(p);
                if (bigk) bigk->insert(p);
                if (smallk) smallk->insert(p);
                oracle.insert(op.a, op.b);
                ++rep.updateCount;
                break;
            }
            case 'D': {
                auto s = oracle.scoreOf(op.a);
                if (!s)
                    throw std::runtime_error("op " + std::to_string(idx) +
                                             ": delete of dead x");
                Point p{op.a, *s};
                if (facade) facade->erase(p);
                if (bigk) bigk->erase(p);
                if (smallk) smallk->erase(p);
                oracle.erase(op.a);
                ++rep.updateCount;
                break;
            }
            case 'Q': {
                if (smallk)
                    throw std::runtime_error("op " + std::to_string(idx) +
                                             ": Q unsupported on smallk");
                std::vector<Point> got = facade ? facade->queryTopk(op.a, op.b, op.k)
                                                : bigk->queryTopk(op.a, op.b, op.k);
                resultSize = got.size();
                ++rep.queryCount;
                if (options.oracle) {
                    std::vector<Key> ys;
                    for (const Point& p : got) ys.push_back(p.y);
                    std::sort(ys.rbegin(), ys.rend());
                    if (static_cast<std::ptrdiff_t>(idx) == options.faultInjectOp)
                        ys.push_back(kMaxKey); // deliberate corruption
                    mismatch = ys != oracle.topkScores(op.a, op.b, op.k);
                }
                break;
            }
            case 'S': {
                if (bigk)
                    throw std::runtime_error("op " + std::to_string(idx) +
                                             ": S unsupported on bigk");
                SmallKTree* sk = smallk ? smallk.get() : facade->smallk();
                std::uint64_t k = std::min<std::uint64_t>(op.k, sk->params().l);
                auto got = sk->selectApprox(op.a, op.b, k);
                resultSize = got ? 1 : 0;
                ++rep.selectCount;
                if (options.oracle) {
                    std::size_t hits =
                        oracle.topkScores(op.a, op.b, oracle.liveCount()).size();
                    if (!got) {
                        mismatch = hits >= k;
                    } else if (oracle.scoreOf(got->x) != got->y || got->x < op.a ||
                               got->x > op.b) {
                        mismatch = true;
                    } else {
                        std::size_t rank = oracle.rankInRange(op.a, op.b, got->y);
                        double ratio = double(rank) / double(k);
                        rep.worstSelectRatio = std::max(rep.worstSelectRatio, ratio);
                        mismatch = rank < k || ratio > options.selectWindowBound;
                    }
                }
                break;
            }
            default:
                throw std::runtime_error("op " + std::to_string(idx) +
                                         ": unknown type");
        }

        IoStats delta = store.statsSnapshot() - before;
        if (op.type == 'Q' || op.type == 'S') queryIo += double(delta.total());
        else updateIo += double(delta.total());
        if (mismatch) {
            ++rep.mismatches;
            if (rep.firstMismatchOp < 0)
                rep.firstMismatchOp = static_cast<std::ptrdiff_t>(idx);
        }
        if (options.csv)
            *options.csv << idx << ',' << op.type << ',' << delta.reads << ','
                         << delta.writes << ',' << resultSize << ','
                         << (mismatch ? 1 : 0) << '\n';
        if (options.audit == AuditMode::EveryOp && !rep.auditFailed &&
            !audit(&rep.auditWhy)) {
            rep.auditFailed = true;
        }
        ++rep.opCount;
    }
    if (options.audit == AuditMode::Final && !audit(&rep.auditWhy))
        rep.auditFailed = true;

    rep.totalIo = store.statsSnapshot();
    std::size_t probes = rep.queryCount + rep.selectCount;
    rep.meanQueryIo = probes ? queryIo / double(probes) : 0;
    rep.meanUpdateIo = rep.updateCount ? updateIo / double(rep.updateCount) : 0;
    return rep;
}

} // namespace emtopk
