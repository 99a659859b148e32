#pragma once

#include "ncnd/errors.hpp"
#include "ncnd/graph.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace ncnd {

struct FlowPath {
    std::vector<NodeId> nodes;  // source .. sink
    Rational amount;
};

/// Splittable single-sink flow in path form: each demand routes its full
/// amount over one or more paths.
struct SplittableFlow {
    struct Demand {
        NodeId source;
        Rational amount;
        std::vector<FlowPath> paths;
    };
    NodeId sink = -1;
    std::vector<Demand> demands;

    std::map<NodeId, Rational> node_loads() const;
    Rational max_demand() const;
    /// Throws MalformedFlowError unless every demand's paths run source->sink
    /// with positive amounts summing to the demand.
    void validate() const;
};

/// One path per demand carrying the full demand.
struct UnsplittableFlow {
    struct Route {
        NodeId source;
        Rational demand;
        std::vector<NodeId> path;
    };
    NodeId sink = -1;
    std::vector<Route> routes;

    std::map<NodeId, Rational> node_loads() const;
    SplittableFlow as_splittable() const;
};

struct MaxFlowResult {
    std::int64_t value = 0;
    SplittableFlow flow;
};

/// Exact node-capacitated max flow; the returned flow is a path decomposition
/// (greedy by maximal bottleneck, ties by smallest node id).
MaxFlowResult max_flow_node_cap(const DirectedNodeCapGraph& g, NodeId source, NodeId sink);

/// Min-cost routing of one unit per listed source to the sink, at most
/// `per_node_cap` units through any node, node costs charged per unit of
/// flow. Throws InfeasibleError when no fractional routing exists.
/// `cap_of` optionally overrides the uniform cap per node (used by the
/// augmented single-sink sub-instances).
std::vector<std::vector<NodeId>> min_cost_flow_node_cap(
    const DirectedNodeCapGraph& g, const std::vector<NodeId>& unit_sources, NodeId sink,
    std::int64_t per_node_cap, const std::map<NodeId, std::int64_t>* cap_override = nullptr);

/// Splittable-to-unsplittable conversion for single-sink flows. The output
/// routes each demand along arcs of the input's support and raises no node
/// load above (input load + max demand).
UnsplittableFlow dgg_unsplittable(const SplittableFlow& f, NodeId sink);

/// Peels a nonnegative single-sink arc flow into per-source path flows
/// (greedy widest path). The aggregate must route each listed demand.
SplittableFlow decompose_arc_flow(
    const std::map<std::pair<NodeId, NodeId>, Rational>& arc_flow,
    const std::vector<std::pair<NodeId, Rational>>& source_demands, NodeId sink);

/// Packing graph for the concurrent-flow solver: arcs consume capacitated
/// resources at given rates. An undirected edge is two arcs sharing one
/// resource; a cost budget is one extra resource used by every arc at its
/// cost rate.
struct ResourceGraph {
    int node_count = 0;
    std::vector<double> resource_cap;
    struct Arc {
        NodeId from;
        NodeId to;
        std::vector<std::pair<int, double>> usage;  // (resource, rate), rate > 0
    };
    std::vector<Arc> arcs;
};

struct McfDemand {
    NodeId source;
    NodeId sink;
    double amount;
};

struct ConcurrentFlowResult {
    double throughput = 0.0;  // lambda-hat
    struct PathFlow {
        std::vector<NodeId> nodes;
        std::vector<int> arcs;  // arc indices into the graph, one per hop
        double amount;
    };
    std::vector<std::vector<PathFlow>> per_demand;  // scaled: loads respect caps

    std::vector<double> resource_loads(const ResourceGraph& g) const;
};

/// Approximate maximum concurrent flow (iterative shortest-path reweighting
/// with exponential length updates). Returns throughput >= (1-eps) * optimum;
/// the returned flows deliver exactly throughput * amount per demand and
/// respect resource capacities. Deterministic given inputs; throughput 0 when
/// some pair is disconnected.
ConcurrentFlowResult concurrent_mcf(const ResourceGraph& g, const std::vector<McfDemand>& demands,
                                    double eps);

}  // namespace ncnd
