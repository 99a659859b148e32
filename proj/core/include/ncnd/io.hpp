#pragma once

#include "ncnd/energy.hpp"
#include "ncnd/instances.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ncnd {

/// Parse failure with a JSON-pointer-style key path.
struct ParseError : NcndError {
    std::string key_path;
    ParseError(const std::string& msg, std::string path)
        : NcndError(msg + " (at " + (path.empty() ? "$" : path) + ")"),
          key_path(std::move(path)) {}
};

struct FixtureOptimum {
    Rational cost;
    std::vector<NodeId> nodes;
    std::string note;
};

/// Versioned instance file: one graph plus kind-specific problem data.
/// Costs serialize as exact integer/rational strings.
struct InstanceFile {
    int format_version = 1;
    std::string kind;  // "ssnc" | "mcnc" | "eevrp"
    UndirectedMultigraph graph;
    // ssnc
    NodeId sink = -1;
    std::vector<std::pair<NodeId, std::int64_t>> demands;
    // mcnc / eevrp
    std::vector<RequestPair> pairs;
    // parameters
    std::int64_t capacity = 1;      // q (ssnc, mcnc)
    double sigma = 1.0;             // eevrp
    double alpha = 2.0;             // eevrp
    std::optional<FixtureOptimum> optimum;

    SsncInstance to_ssnc() const;
    McncInstance to_mcnc() const;
    EevrpInstance to_eevrp() const;
};

struct ParseOptions {
    bool strict = true;  // unknown fields rejected; otherwise warned
};

struct ParseResult {
    InstanceFile file;
    std::vector<std::string> warnings;
};

ParseResult parse_instance(const std::string& text, const ParseOptions& opts = {});
std::string serialize_instance(const InstanceFile& file);

/// Deterministic instance generators; kinds: random-geometric, grid,
/// star-pathological, binary-merge, dumbbell.
InstanceFile generate(const std::string& kind,
                      const std::map<std::string, std::string>& params, std::uint64_t seed);

}  // namespace ncnd
