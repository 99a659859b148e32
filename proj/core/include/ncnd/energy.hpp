#pragma once

#include "ncnd/instances.hpp"
#include "ncnd/mcnc.hpp"

#include <map>
#include <optional>
#include <vector>

namespace ncnd {

/// Energy-efficient vertex routing: per active node power sigma + f^alpha.
struct EevrpInstance {
    UndirectedMultigraph graph;
    std::vector<RequestPair> pairs;  // unit demands
    double static_power = 1.0;       // sigma >= 1
    double exponent = 2.0;           // alpha > 1

    static EevrpInstance create(UndirectedMultigraph graph, std::vector<RequestPair> pairs,
                                double static_power, double exponent);
};

/// Capacity/cost tiering of the reduction: q' = ceil(sigma^(1/alpha)) copies
/// blocks, copy i of a vertex carries the cost of routing its i-th block.
struct TieredReduction {
    std::int64_t q_prime = 1;
    std::vector<double> tier_costs;                 // c'_1 .. c'_m
    std::vector<std::vector<NodeId>> copies_of;     // original -> copy nodes
    std::vector<NodeId> original_of;                // reduced node -> original (or -1 pendant owner)
    std::map<NodeId, NodeId> pendant_home;          // pendant -> original vertex
    int copies_per_node = 1;
};

struct EnergyReduction {
    McncInstance mcnc;
    TieredReduction tiers;
};

EnergyReduction reduce_to_mcnc(const EevrpInstance& e);

/// Total power of a fractional per-pair routing in the original graph.
double energy_of(const std::map<int, std::vector<std::pair<std::vector<NodeId>, double>>>& routing,
                 double sigma, double alpha);

struct LiftedSolution {
    std::map<int, std::vector<std::pair<std::vector<NodeId>, double>>> routing;  // in G'
    double energy = 0.0;
    double bicriteria_factor = 1.0;  // rho1 * rho2^alpha
};

/// Collapses copy-level paths back to the original graph and evaluates the
/// energy objective. `cost_ratio` is the measured rho1 when an oracle ran.
LiftedSolution lift_solution(const Solution& sol, const EnergyReduction& red,
                             const EevrpInstance& e,
                             std::optional<double> cost_ratio = std::nullopt);

}  // namespace ncnd
