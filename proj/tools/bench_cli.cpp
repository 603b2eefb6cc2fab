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

#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "emtopk/topk.hpp"
#include "emtopk/workload.hpp"

using namespace emtopk;

namespace {

RunConfig loadConfig(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return RunConfig::parse(in);
}

int cmdGen(const std::string& out, const GenParams& params) {
    auto ops = genWorkload(params);
    std::ofstream of(out);
    if (!of) throw std::runtime_error("cannot open output file: " + out);
    writeWorkload(of, ops);
    std::cout << "wrote " << ops.size() << " ops to " << out << "\n";
    return 0;
}

int cmdRun(const std::string& workloadPath, const std::string& configPath,
           const std::string& auditStr, bool oracleOn, const std::string& csvPath,
           const std::string& structureStr) {
    RunConfig cfg = loadConfig(configPath);
    std::ifstream wf(workloadPath);
    if (!wf) throw std::runtime_error("cannot open workload file: " + workloadPath);
    auto ops = parseWorkload(wf);

    RunOptions opt;
    opt.oracle = oracleOn;
    if (auditStr == "off") opt.audit = AuditMode::Off;
    else if (auditStr == "final") opt.audit = AuditMode::Final;
    else if (auditStr == "every-op") opt.audit = AuditMode::EveryOp;
    else throw std::runtime_error("unknown audit mode: " + auditStr);
    if (structureStr == "facade") opt.structure = StructureSel::Facade;
    else if (structureStr == "bigk") opt.structure = StructureSel::Bigk;
    else if (structureStr == "smallk") opt.structure = StructureSel::Smallk;
    else throw std::runtime_error("unknown structure: " + structureStr);

    std::ofstream csv;
    if (!csvPath.empty()) {
        csv.open(csvPath);
        if (!csv) throw std::runtime_error("cannot open csv file: " + csvPath);
        opt.csv = &csv;
    }

    RunReport rep = runWorkload(cfg, ops, opt);
    std::cout << "ops=" << rep.opCount << " updates=" << rep.updateCount
              << " queries=" << rep.queryCount << " selects=" << rep.selectCount
              << "\nio reads=" << rep.totalIo.reads << " writes=" << rep.totalIo.writes
              << " mean-query-io=" << rep.meanQueryIo
              << " mean-update-io=" << rep.meanUpdateIo << "\n";
    if (rep.selectCount)
        std::cout << "worst select rank/k ratio=" << rep.worstSelectRatio << "\n";
    if (rep.mismatches)
        std::cout << "MISMATCHES: " << rep.mismatches << " (first at op "
                  << rep.firstMismatchOp << ")\n";
    if (rep.auditFailed) std::cout << "AUDIT FAILED: " << rep.auditWhy << "\n";
    if (rep.ok()) {
        std::cout << "OK\n";
        return 0;
    }
    return 1;
}

int cmdScale(const std::string& configPath, unsigned lgFrom, unsigned lgTo,
             std::uint64_t seed, const std::string& csvPath) {
    RunConfig cfg = loadConfig(configPath);
    std::ostringstream table;
    table << "n,mean_query_io,mean_update_io\n";
    for (unsigned lg = lgFrom; lg <= lgTo; ++lg) {
        std::size_t n = std::size_t{1} << lg;
        // insert phase (update I/O) then probe phase (query I/O)
        BlockStore probeStore(cfg.em);
        TopkIndex idx(probeStore, cfg.smallk);
        std::mt19937_64 rng(seed + 31 * lg);
        std::set<Key> usedX, usedY;
        std::vector<Point> livePts;
        auto unit = [&] { return double(rng() >> 11) * 0x1.0p-53; };
        double updateIo = 0;
        std::size_t updates = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Key x, y;
            do x = encodeKey(unit());
            while (!usedX.insert(x).second);
            do y = encodeKey(unit());
            while (!usedY.insert(y).second);
            IoStats before = probeStore.statsSnapshot();
            idx.insert({x, y});
            updateIo += double((probeStore.statsSnapshot() - before).total());
            ++updates;
            livePts.push_back({x, y});
        }
        double queryIo = 0;
        std::size_t queries = 256;
        for (std::size_t q = 0; q < queries; ++q) {
            Key a = encodeKey(unit()), b = encodeKey(unit());
            if (a > b) std::swap(a, b);
            std::size_t k = 1 + rng() % 64;
            IoStats before = probeStore.statsSnapshot();
            idx.queryTopk(a, b, k);
            queryIo += double((probeStore.statsSnapshot() - before).total());
        }
        table << n << ',' << queryIo / double(queries) << ','
              << updateIo / double(updates) << '\n';
    }
    std::cout << table.str();
    if (!csvPath.empty()) {
        std::ofstream csv(csvPath);
        if (!csv) throw std::runtime_error("cannot open csv file: " + csvPath);
        csv << table.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Top-k range reporting workload harness"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate a deterministic workload");
    GenParams gp;
    std::string genOut = "workload.txt";
    gen->add_option("-o,--out", genOut, "output file");
    gen->add_option("-n,--ops", gp.n, "number of operations");
    gen->add_option("--seed", gp.seed, "RNG seed");
    gen->add_option("--dist", gp.distribution, "uniform|clustered");
    gen->add_option("--w-insert", gp.wInsert, "insert weight");
    gen->add_option("--w-delete", gp.wDelete, "delete weight");
    gen->add_option("--w-query", gp.wQuery, "query weight");
    gen->add_option("--w-select", gp.wSelect, "selection-probe weight");
    gen->add_option("--max-select-k", gp.maxSelectK, "cap for S-op k");

    auto* run = app.add_subcommand("run", "execute a workload with oracle checks");
    std::string workloadPath, configPath, csvPath;
    std::string auditStr = "off", structureStr = "facade";
    bool oracleOn = true;
    run->add_option("workload", workloadPath, "workload file")->required();
    run->add_option("--config", configPath, "key=value config file");
    run->add_option("--audit", auditStr, "off|final|every-op");
    run->add_flag("--oracle,!--no-oracle", oracleOn, "cross-check against oracle");
    run->add_option("--csv", csvPath, "per-op CSV output path");
    run->add_option("--structure", structureStr, "facade|bigk|smallk");

    auto* scale = app.add_subcommand("scale", "doubling-series I/O table");
    unsigned lgFrom = 9, lgTo = 14;
    std::uint64_t scaleSeed = 1;
    std::string scaleConfig, scaleCsv;
    scale->add_option("--config", scaleConfig, "key=value config file");
    scale->add_option("--lg-from", lgFrom, "smallest n as a power of two");
    scale->add_option("--lg-to", lgTo, "largest n as a power of two");
    scale->add_option("--seed", scaleSeed, "RNG seed");
    scale->add_option("--csv", scaleCsv, "CSV output path");

    CLI11_PARSE(app, argc, argv);
    try {
        if (gen->parsed()) return cmdGen(genOut, gp);
        if (run->parsed())
            return cmdRun(workloadPath, configPath, auditStr, oracleOn, csvPath,
                          structureStr);
        if (scale->parsed())
            return cmdScale(scaleConfig, lgFrom, lgTo, scaleSeed, scaleCsv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
