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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emtopk/em.hpp"
#include "emtopk/encode.hpp"
#include "emtopk/smallk.hpp"

namespace emtopk {

/// One workload line. type is one of:
///   'I' x score   insert
///   'D' x         delete (score resolved from live state)
///   'Q' x1 x2 k   exact top-k range query
///   'S' x1 x2 k   approximate range k-selection probe
struct WorkloadOp {
    char type = 'I';
    Key a = 0, b = 0;
    std::uint64_t k = 0;
    bool operator==(const WorkloadOp&) const = default;
};

/// Line-oriented text format; keys as 16-digit hexadecimal bit patterns so
/// runs are bit-reproducible. Throws with a 1-based line number on errors.
std::vector<WorkloadOp> parseWorkload(std::istream& in);
void writeWorkload(std::ostream& out, const std::vector<WorkloadOp>& ops);

struct GenParams {
    std::size_t n = 1000;            // number of ops
    std::uint64_t seed = 1;
    std::string distribution = "uniform"; // or "clustered"
    // percentage weights; queries/probes are emitted only when enough
    // elements are live
    unsigned wInsert = 60, wDelete = 15, wQuery = 20, wSelect = 5;
    std::size_t maxSelectK = 8; // cap for S-op k (the small structure's l)
};

/// Deterministic pseudo-random workload with distinct coordinates and
/// scores and referentially valid deletes.
std::vector<WorkloadOp> genWorkload(const GenParams& params);

/// Exhaustive ground truth over the live set.
class Oracle {
  public:
    void insert(Key x, Key score) { live_[x] = score; }
    void erase(Key x) { live_.erase(x); }
    std::optional<Key> scoreOf(Key x) const;
    std::size_t liveCount() const { return live_.size(); }

    /// The min(k, hits) highest in-range scores, descending.
    std::vector<Key> topkScores(Key x1, Key x2, std::uint64_t k) const;

    /// Descending rank of `score` among in-range scores (elements >= it).
    std::size_t rankInRange(Key x1, Key x2, Key score) const;

  private:
    std::map<Key, Key> live_;
};

/// key=value configuration: machine parameters plus small-structure
/// constants. Unknown keys are rejected.
struct RunConfig {
    EmConfig em{};
    SmallkParams smallk{};
    std::uint64_t seed = 1;

    static RunConfig parse(std::istream& in);
};

enum class AuditMode { Off, Final, EveryOp };
enum class StructureSel { Facade, Bigk, Smallk };

struct RunOptions {
    AuditMode audit = AuditMode::Off;
    bool oracle = true;
    StructureSel structure = StructureSel::Facade;
    std::ostream* csv = nullptr; // per-op rows when set
    // S-probe acceptance window: oracle rank must lie in [k, windowBound*k]
    double selectWindowBound = 192.0;
    // Test hook: corrupt the result of this Q op (0-based index) before the
    // oracle comparison, to prove mismatch detection and reporting work.
    std::ptrdiff_t faultInjectOp = -1;
};

struct RunReport {
    std::size_t opCount = 0;
    std::size_t updateCount = 0;
    std::size_t queryCount = 0;
    std::size_t selectCount = 0;
    std::size_t mismatches = 0;
    std::ptrdiff_t firstMismatchOp = -1; // 0-based op index
    bool auditFailed = false;
    std::string auditWhy;
    IoStats totalIo{};
    double meanQueryIo = 0;
    double meanUpdateIo = 0;
    double worstSelectRatio = 0; // max oracle-rank / k over S probes

    bool ok() const { return mismatches == 0 && !auditFailed; }
};

/// Executes the workload against the selected structure, cross-checking
/// queries and probes against the oracle when enabled. Ops that a
/// structure cannot express ('S' on bigk, 'Q' on smallk) throw.
RunReport runWorkload(const RunConfig& config, const std::vector<WorkloadOp>& ops,
                      const RunOptions& options);

} // namespace emtopk
