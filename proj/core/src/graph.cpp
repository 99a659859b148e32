#include "ncnd/graph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace ncnd {

UndirectedMultigraph UndirectedMultigraph::create(std::vector<Rational> node_cost,
                                                  std::vector<std::string> labels,
                                                  std::vector<std::pair<NodeId, NodeId>> edges) {
    if (node_cost.size() != labels.size())
        throw std::invalid_argument("node_cost and labels must have the same size");
    const int n = static_cast<int>(node_cost.size());
    for (const auto& c : node_cost)
        if (c < 0) throw std::invalid_argument("negative node cost");
    for (auto [u, v] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::invalid_argument("edge endpoint out of range");
        if (u == v) throw std::invalid_argument("self-loop rejected");
    }
    UndirectedMultigraph g;
    g.node_cost = std::move(node_cost);
    g.labels = std::move(labels);
    g.edges = std::move(edges);
    return g;
}

UndirectedMultigraph UndirectedMultigraph::create(std::vector<Rational> node_cost,
                                                  std::vector<std::pair<NodeId, NodeId>> edges) {
    std::vector<std::string> labels(node_cost.size());
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = "v" + std::to_string(i);
    return create(std::move(node_cost), std::move(labels), std::move(edges));
}

std::vector<std::vector<std::pair<NodeId, int>>> UndirectedMultigraph::adjacency() const {
    std::vector<std::vector<std::pair<NodeId, int>>> adj(node_count());
    for (int i = 0; i < edge_count(); ++i) {
        auto [u, v] = edges[i];
        adj[u].push_back({v, i});
        adj[v].push_back({u, i});
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
}

std::vector<char> UndirectedMultigraph::reachable_from(NodeId start) const {
    std::vector<char> seen(node_count(), 0);
    if (start < 0 || start >= node_count()) return seen;
    auto adj = adjacency();
    std::deque<NodeId> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
        NodeId u = queue.front();
        queue.pop_front();
        for (auto [v, e] : adj[u]) {
            (void)e;
            if (!seen[v]) {
                seen[v] = 1;
                queue.push_back(v);
            }
        }
    }
    return seen;
}

InducedSubgraph induced_subgraph(const UndirectedMultigraph& g, const std::vector<NodeId>& keep) {
    std::vector<int> from_original(g.node_count(), -1);
    std::vector<NodeId> sorted_keep = keep;
    std::sort(sorted_keep.begin(), sorted_keep.end());
    sorted_keep.erase(std::unique(sorted_keep.begin(), sorted_keep.end()), sorted_keep.end());
    for (NodeId v : sorted_keep)
        if (v < 0 || v >= g.node_count()) throw std::invalid_argument("keep node out of range");

    std::vector<Rational> cost;
    std::vector<std::string> labels;
    for (size_t i = 0; i < sorted_keep.size(); ++i) {
        from_original[sorted_keep[i]] = static_cast<int>(i);
        cost.push_back(g.node_cost[sorted_keep[i]]);
        labels.push_back(g.labels[sorted_keep[i]]);
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (auto [u, v] : g.edges)
        if (from_original[u] >= 0 && from_original[v] >= 0)
            edges.push_back({from_original[u], from_original[v]});

    InducedSubgraph out;
    out.graph = UndirectedMultigraph::create(std::move(cost), std::move(labels), std::move(edges));
    out.to_original = std::move(sorted_keep);
    out.from_original = std::move(from_original);
    return out;
}

DirectedNodeCapGraph DirectedNodeCapGraph::create(int node_count,
                                                  std::vector<std::pair<NodeId, NodeId>> arcs,
                                                  std::vector<std::int64_t> node_capacity,
                                                  std::vector<Rational> node_cost) {
    if (static_cast<int>(node_capacity.size()) != node_count ||
        static_cast<int>(node_cost.size()) != node_count)
        throw std::invalid_argument("capacity/cost vectors must match node_count");
    for (auto [u, v] : arcs)
        if (u < 0 || u >= node_count || v < 0 || v >= node_count)
            throw std::invalid_argument("arc endpoint out of range");
    for (auto c : node_capacity)
        if (c < 0) throw std::invalid_argument("negative node capacity");
    DirectedNodeCapGraph g;
    g.node_count = node_count;
    g.arcs = std::move(arcs);
    g.node_capacity = std::move(node_capacity);
    g.node_cost = std::move(node_cost);
    return g;
}

std::pair<ArcGraph, SplitMap> split_transform(const DirectedNodeCapGraph& g) {
    ArcGraph out;
    SplitMap map;
    map.original_count = g.node_count;
    out.node_count = 2 * g.node_count;
    out.arcs.reserve(g.node_count + g.arcs.size());
    for (NodeId v = 0; v < g.node_count; ++v)
        out.arcs.push_back({map.in(v), map.out(v), g.node_capacity[v], g.node_cost[v]});
    for (auto [u, v] : g.arcs)
        out.arcs.push_back({map.out(u), map.in(v), kUnboundedCap, Rational(0)});
    return {std::move(out), map};
}

DirectedNodeCapGraph to_directed(const UndirectedMultigraph& g, std::int64_t uniform_capacity,
                                 NodeId unbounded_node) {
    std::vector<std::pair<NodeId, NodeId>> arcs;
    arcs.reserve(2 * g.edges.size());
    for (auto [u, v] : g.edges) {
        arcs.push_back({u, v});
        arcs.push_back({v, u});
    }
    std::vector<std::int64_t> caps(g.node_count(), uniform_capacity);
    if (unbounded_node >= 0 && unbounded_node < g.node_count())
        caps[unbounded_node] = kUnboundedCap;
    return DirectedNodeCapGraph::create(g.node_count(), std::move(arcs), std::move(caps),
                                        g.node_cost);
}

}  // namespace ncnd
