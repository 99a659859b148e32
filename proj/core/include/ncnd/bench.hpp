#pragma once

#include "ncnd/io.hpp"
#include "ncnd/mcnc.hpp"
#include "ncnd/oracle.hpp"
#include "ncnd/ssnc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ncnd {

struct BenchOptions {
    std::vector<std::uint64_t> seeds{1};
    bool with_timing = false;  // timing column breaks byte-stability; opt-in
    bool run_oracle = true;
    OracleBudget budget;
    SsncKnobs ssnc;
    McncKnobs mcnc;
};

struct BenchResult {
    std::string table;  // delimiter-separated, fixed header
    AuditLedger ledger;
    int failed_rows = 0;
};

/// One row per instance x seed; per-row failures are recorded in the status
/// column and the run continues. Deterministic given corpus, knobs and seeds
/// (byte-identical without timing).
BenchResult bench(const std::vector<std::pair<std::string, InstanceFile>>& corpus,
                  const BenchOptions& opts);

}  // namespace ncnd
