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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "emtopk/workload.hpp"

using namespace emtopk;

namespace {

std::string runToCsv(const RunConfig& cfg, const std::vector<WorkloadOp>& ops,
                     RunOptions opt) {
    std::ostringstream csv;
    opt.csv = &csv;
    RunReport rep = runWorkload(cfg, ops, opt);
    CHECK(rep.ok());
    return csv.str();
}

} // namespace

TEST_CASE("workload text format roundtrips") {
    std::vector<WorkloadOp> ops = {
        {'I', 0x10, 0x20, 0},
        {'D', 0x10, 0, 0},
        {'Q', 1, kMaxKey, 7},
        {'S', 0, 5, 2},
    };
    std::ostringstream out;
    writeWorkload(out, ops);
    std::istringstream in(out.str());
    CHECK(parseWorkload(in) == ops);

    std::istringstream annotated("# header comment\n\nI 10 20 # trailing\n");
    auto parsed = parseWorkload(annotated);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == WorkloadOp{'I', 0x10, 0x20, 0});
}

TEST_CASE("parse errors carry 1-based line numbers") {
    auto failsWith = [](const std::string& text, const std::string& needle) {
        std::istringstream in(text);
        try {
            parseWorkload(in);
            FAIL("expected a parse error for: " << text);
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    failsWith("I 10 20\nX 1 2\n", "line 2: unknown op");
    failsWith("I 10\n", "line 1: I needs x and score");
    failsWith("I 10 zz\n", "line 1: not a hexadecimal value: 'zz'");
    failsWith("Q 5 4 1\n", "line 1: x1 > x2");
    failsWith("Q 1 4 0\n", "line 1: k must be >= 1");
    failsWith("I 10 20 30\n", "line 1: unexpected token '30'");
    failsWith("S 1 2\n", "line 1: S needs x1, x2, k");
}

TEST_CASE("generation is deterministic and referentially valid") {
    GenParams p;
    p.n = 800;
    p.seed = 123;
    auto a = genWorkload(p);
    auto b = genWorkload(p);
    CHECK(a == b);
    p.seed = 124;
    CHECK(genWorkload(p) != a);

    p.distribution = "clustered";
    auto c = genWorkload(p);
    CHECK(c.size() == p.n);
    p.distribution = "triangular";
    CHECK_THROWS(genWorkload(p));

    // referential validity: D only of live x, I never duplicates an x
    std::set<Key> live, everX;
    for (const auto& op : a) {
        if (op.type == 'I') {
            CHECK(everX.insert(op.a).second);
            live.insert(op.a);
        } else if (op.type == 'D') {
            CHECK(live.erase(op.a) == 1);
        } else {
            CHECK(op.a <= op.b);
            CHECK(op.k >= 1);
        }
    }
}

TEST_CASE("config parsing rejects unknown keys") {
    std::istringstream good(
        "B=32 M=2048  # machine\nsmallk_l=2 smallk_c2=4 smallk_c1=3.5\nseed=9\n");
    RunConfig cfg = RunConfig::parse(good);
    CHECK(cfg.em.B == 32);
    CHECK(cfg.em.M == 2048);
    CHECK(cfg.smallk.l == 2);
    CHECK(cfg.smallk.c2 == 4);
    CHECK(cfg.smallk.c1 == doctest::Approx(3.5));
    CHECK(cfg.seed == 9);

    std::istringstream bad("B=32\nblock_size=16\n");
    try {
        RunConfig::parse(bad);
        FAIL("expected rejection of unknown key");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2: unknown key 'block_size'") !=
              std::string::npos);
    }
}

TEST_CASE("runs are clean against the oracle on all structures") {
    GenParams p;
    p.n = 500;
    p.seed = 77;
    RunConfig cfg; // defaults: B=16, smallk l=4
    RunOptions opt;
    opt.audit = AuditMode::Final;

    auto ops = genWorkload(p);
    RunReport rep = runWorkload(cfg, ops, opt);
    CHECK(rep.ok());
    CHECK(rep.opCount == p.n);
    CHECK(rep.queryCount > 0);
    CHECK(rep.selectCount > 0);
    CHECK(rep.worstSelectRatio >= 1.0);

    p.wSelect = 0;
    opt.structure = StructureSel::Bigk;
    CHECK(runWorkload(cfg, genWorkload(p), opt).ok());

    p.wSelect = 5;
    p.wQuery = 0;
    opt.structure = StructureSel::Smallk;
    opt.audit = AuditMode::EveryOp;
    p.n = 150;
    CHECK(runWorkload(cfg, genWorkload(p), opt).ok());
}

TEST_CASE("an injected fault is reported with its op index") {
    GenParams p;
    p.n = 300;
    p.seed = 31;
    auto ops = genWorkload(p);
    std::ptrdiff_t firstQ = -1;
    std::ptrdiff_t secondQ = -1;
    for (std::size_t i = 0; i < ops.size(); ++i)
        if (ops[i].type == 'Q') {
            if (firstQ < 0) firstQ = std::ptrdiff_t(i);
            else if (secondQ < 0) secondQ = std::ptrdiff_t(i);
        }
    REQUIRE(secondQ >= 0);

    RunConfig cfg;
    RunOptions opt;
    opt.faultInjectOp = secondQ;
    RunReport rep = runWorkload(cfg, ops, opt);
    CHECK(!rep.ok());
    CHECK(rep.mismatches == 1);
    CHECK(rep.firstMismatchOp == secondQ);
}

TEST_CASE("per-op CSV is stable against the frozen golden run") {
    GenParams p;
    p.n = 250;
    p.seed = 2026;
    RunConfig cfg;
    RunOptions opt;
    std::string csv = runToCsv(cfg, genWorkload(p), opt);
    CHECK(csv.rfind("op,type,reads,writes,result,mismatch\n", 0) == 0);

    namespace fs = std::filesystem;
    fs::path golden = fs::path(TEST_DATA_DIR) / "golden_run.csv";
    if (!fs::exists(golden)) {
        fs::create_directories(golden.parent_path());
        std::ofstream(golden) << csv;
        FAIL("golden file was missing; froze the current run at " << golden.string()
             << " - rerun to compare");
    }
    std::ifstream in(golden);
    std::stringstream want;
    want << in.rdbuf();
    CHECK(csv == want.str());
}
