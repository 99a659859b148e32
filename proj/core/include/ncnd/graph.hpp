#pragma once

#include "ncnd/rational.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ncnd {

using NodeId = int;

/// Sentinel for "no capacity bound" (designated sinks).
constexpr std::int64_t kUnboundedCap = std::numeric_limits<std::int64_t>::max() / 4;

/// Node-costed undirected multigraph. Parallel edges allowed, self-loops
/// rejected at construction. Immutable after construction.
struct UndirectedMultigraph {
    std::vector<Rational> node_cost;
    std::vector<std::string> labels;
    std::vector<std::pair<NodeId, NodeId>> edges;

    int node_count() const { return static_cast<int>(node_cost.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }

    /// Throws std::invalid_argument on self-loops, bad endpoints, negative
    /// costs or label/cost size mismatch.
    static UndirectedMultigraph create(std::vector<Rational> node_cost,
                                       std::vector<std::string> labels,
                                       std::vector<std::pair<NodeId, NodeId>> edges);

    /// Convenience: unit labels "v0".."v{n-1}".
    static UndirectedMultigraph create(std::vector<Rational> node_cost,
                                       std::vector<std::pair<NodeId, NodeId>> edges);

    /// Per node, (neighbor, edge index) sorted by (neighbor, edge index).
    std::vector<std::vector<std::pair<NodeId, int>>> adjacency() const;

    /// Nodes reachable from `start` (multiplicity-blind).
    std::vector<char> reachable_from(NodeId start) const;
};

struct InducedSubgraph {
    UndirectedMultigraph graph;
    std::vector<NodeId> to_original;    // new id -> original id
    std::vector<int> from_original;     // original id -> new id or -1
};

/// Keeps exactly the edges with both endpoints in `keep`; costs and labels
/// carried over. `keep` must be a subset of the node ids.
InducedSubgraph induced_subgraph(const UndirectedMultigraph& g, const std::vector<NodeId>& keep);

/// Directed multigraph with capacities and costs on nodes. Internal substrate
/// for all flow computations; capacities may vary per node (I1/I2 need that).
struct DirectedNodeCapGraph {
    int node_count = 0;
    std::vector<std::pair<NodeId, NodeId>> arcs;
    std::vector<std::int64_t> node_capacity;
    std::vector<Rational> node_cost;

    static DirectedNodeCapGraph create(int node_count,
                                       std::vector<std::pair<NodeId, NodeId>> arcs,
                                       std::vector<std::int64_t> node_capacity,
                                       std::vector<Rational> node_cost);
};

/// Arc-capacitated directed graph produced by split_transform.
struct ArcGraph {
    struct Arc {
        NodeId from;
        NodeId to;
        std::int64_t cap;
        Rational cost;
    };
    int node_count = 0;
    std::vector<Arc> arcs;
};

/// Invertible node-pair map for split_transform: v -> (v_in, v_out).
/// The first `original_count` arcs of the transformed graph are exactly the
/// capacity arcs, arc v = (in(v), out(v)).
struct SplitMap {
    int original_count = 0;
    NodeId in(NodeId v) const { return 2 * v; }
    NodeId out(NodeId v) const { return 2 * v + 1; }
    NodeId original(NodeId split_node) const { return split_node / 2; }
    bool is_in(NodeId split_node) const { return split_node % 2 == 0; }
};

/// Node splitting: v becomes (v_in, v_out) joined by an arc of capacity
/// node_capacity[v] and cost node_cost[v]; each arc (u,v) becomes
/// (u_out, v_in) with unbounded capacity and zero cost.
std::pair<ArcGraph, SplitMap> split_transform(const DirectedNodeCapGraph& g);

/// Both directions of every undirected edge, as a node-capacitated digraph.
DirectedNodeCapGraph to_directed(const UndirectedMultigraph& g,
                                 std::int64_t uniform_capacity,
                                 NodeId unbounded_node = -1);

}  // namespace ncnd
