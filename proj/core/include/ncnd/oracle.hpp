#pragma once

#include "ncnd/audit.hpp"
#include "ncnd/errors.hpp"
#include "ncnd/instances.hpp"
#include "ncnd/steiner.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ncnd {

/// Enumeration limits; past them the oracles abort with ExhaustedError.
struct OracleBudget {
    int max_nodes = 12;
    int max_pairs = 5;
    double time_cap_seconds = 120.0;
};

enum class EnumOrder { CostAscending, SizeAscending };

struct ExactSsncResult {
    bool feasible = false;
    std::vector<NodeId> nodes;
    Rational cost;
    bool unsplittable_checked = false;
};

/// Minimum-cost node subset whose induced graph routes all demands to the
/// sink. Fractional feasibility by max flow; unsplittable confirmation by
/// path-assignment enumeration when the source count is within budget.
ExactSsncResult exact_ssnc(const SsncInstance& inst, const OracleBudget& budget = {},
                           EnumOrder order = EnumOrder::CostAscending);

struct ExactMcncResult {
    bool feasible = false;
    std::vector<NodeId> nodes;
    Rational cost;                           // fractional-feasibility optimum
    std::optional<Rational> integral_cost;   // when pair count <= 3
};

/// Fractional feasibility is decided exactly by a small path-based LP.
ExactMcncResult exact_mcnc_fractional(const McncInstance& inst, const OracleBudget& budget = {},
                                      EnumOrder order = EnumOrder::CostAscending);

struct ExactTreeResult {
    std::vector<NodeId> tree;
    Rational cost;
};

/// Exhaustive optimum over connected node subsets containing the root with at
/// least `target` terminals. nullopt when no such subtree exists.
std::optional<ExactTreeResult> exact_pnwst(const PnwstQuery& q, const OracleBudget& budget = {},
                                           EnumOrder order = EnumOrder::CostAscending);

struct ExactDensityResult {
    std::vector<NodeId> tree;
    std::vector<int> covered;
    Rational cost;
    Rational density;
};

/// Exhaustive minimum-density counterpart of max_density_tree.
std::optional<ExactDensityResult> exact_density(const SsncInstance& inst, const WElements& welems,
                                                const std::vector<Rational>& beta,
                                                const std::vector<char>& covered,
                                                const OracleBudget& budget = {});

struct RatioRecord {
    std::string instance_digest;
    Rational solver_cost;
    std::optional<Rational> oracle_cost;
    std::optional<Rational> ratio;  // absent when the oracle was exhausted
    Rational congestion;
    bool flagged = false;           // oracle exhausted or solver < oracle
};

RatioRecord ratio_report(const std::string& instance_digest, const Rational& solver_cost,
                         const std::optional<Rational>& oracle_cost, const Rational& congestion,
                         AuditLedger& ledger);

std::string instance_digest(const SsncInstance& inst);
std::string instance_digest(const McncInstance& inst);

}  // namespace ncnd
