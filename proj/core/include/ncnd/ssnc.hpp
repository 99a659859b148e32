#pragma once

#include "ncnd/audit.hpp"
#include "ncnd/clustering.hpp"
#include "ncnd/flow.hpp"
#include "ncnd/instances.hpp"

#include <map>
#include <vector>

namespace ncnd {

struct SsncKnobs {
    std::int64_t u_multiplier = 0;  // 0: default ceil(ln q * ln^2 n) + 1
    int max_u_doublings = 4;
    LlscKnobs llsc;
};

struct AggregationResult {
    std::vector<NodeId> roots;  // per cluster (sink when the tree contains it)
    // Per cluster, per assigned terminal (same order as Cluster::assigned):
    // the tree path source -> root.
    std::vector<std::vector<std::vector<NodeId>>> paths;
    std::map<NodeId, std::int64_t> load;
};

/// Routes every assigned demand to its cluster root along a spanning tree of
/// the cluster; sink-containing clusters are rooted at the sink.
AggregationResult aggregate_at_roots(const std::vector<Cluster>& clusters,
                                     const SsncInstance& inst);

/// One unit per listed root (demands and capacities pre-scaled by q), uniform
/// node capacity u. Throws InfeasibleError when no fractional routing exists.
std::vector<std::vector<NodeId>> route_roots_to_sink(
    const std::vector<std::pair<NodeId, std::int64_t>>& roots, const SsncInstance& inst,
    std::int64_t u);

struct SsncSolution {
    std::vector<NodeId> nodes;  // V'
    struct SourceRoute {
        int source_idx;
        std::vector<NodeId> aggregation;  // source .. cluster root
        std::vector<NodeId> trunk;        // cluster root .. sink (empty if root == sink)
    };
    std::vector<SourceRoute> routing;
    Rational cost;
    std::map<NodeId, std::int64_t> load;
    Rational congestion;  // max load/q over regular (non-override) nodes
    std::int64_t u_used = 0;
    AuditLedger ledger;

    /// One simple path per source carrying its whole demand (walks are
    /// loop-erased). Input to the multicommodity merge step.
    UnsplittableFlow as_flow(const SsncInstance& inst) const;
};

SsncSolution solve_ssnc(const SsncInstance& inst, const SsncKnobs& knobs = {});

}  // namespace ncnd
