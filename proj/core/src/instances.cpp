#include "ncnd/instances.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace ncnd {

SsncInstance SsncInstance::create(UndirectedMultigraph graph, NodeId sink,
                                  std::vector<std::pair<NodeId, std::int64_t>> sources,
                                  std::int64_t capacity) {
    if (sink < 0 || sink >= graph.node_count()) throw std::invalid_argument("sink out of range");
    if (capacity < 1) throw std::invalid_argument("capacity must be >= 1");
    for (auto [s, d] : sources) {
        if (s < 0 || s >= graph.node_count()) throw std::invalid_argument("source out of range");
        if (s == sink) throw std::invalid_argument("source equals sink");
        if (d < 1) throw std::invalid_argument("demand must be >= 1");
    }
    SsncInstance inst;
    inst.graph = std::move(graph);
    inst.sink = sink;
    inst.sources = std::move(sources);
    inst.capacity = capacity;
    return inst;
}

std::int64_t SsncInstance::total_demand() const {
    std::int64_t total = 0;
    for (auto [s, d] : sources) total += d;
    return total;
}

McncInstance McncInstance::create(UndirectedMultigraph graph, std::vector<RequestPair> pairs,
                                  std::int64_t capacity) {
    if (capacity < 1) throw std::invalid_argument("capacity must be >= 1");
    for (const auto& p : pairs) {
        if (p.source < 0 || p.source >= graph.node_count() || p.sink < 0 ||
            p.sink >= graph.node_count())
            throw std::invalid_argument("pair endpoint out of range");
        if (p.source == p.sink) throw std::invalid_argument("pair with source == sink");
        if (p.demand != 1) throw std::invalid_argument("MCNC pairs carry demand 1");
    }

    McncInstance inst;
    inst.capacity = capacity;

    // Rewrite shared terminals with zero-cost pendant dummies so each vertex
    // is in at most one request pair.
    std::map<NodeId, int> uses;
    std::vector<Rational> cost = graph.node_cost;
    std::vector<std::string> labels = graph.labels;
    std::vector<std::pair<NodeId, NodeId>> edges = graph.edges;
    for (auto& p : pairs) {
        for (NodeId* endpoint : {&p.source, &p.sink}) {
            NodeId v = *endpoint;
            if (uses[v]++ > 0) {
                NodeId dummy = static_cast<NodeId>(cost.size());
                cost.push_back(Rational(0));
                labels.push_back(labels[v] + "+d" + std::to_string(inst.dummy_of.size()));
                edges.push_back({dummy, v});
                inst.dummy_of.push_back({dummy, v});
                *endpoint = dummy;
            }
        }
    }
    inst.graph = UndirectedMultigraph::create(std::move(cost), std::move(labels), std::move(edges));
    inst.pairs = std::move(pairs);
    return inst;
}

NodeId McncInstance::original_of(NodeId v) const {
    for (auto [dummy, orig] : dummy_of)
        if (dummy == v) return orig;
    return v;
}

Diagnostics validate_instance(const SsncInstance& inst) {
    Diagnostics diag;
    for (auto [s, d] : inst.sources) {
        if (d > inst.capacity)
            diag.issues.push_back("demand exceeds capacity at source " + std::to_string(s) + " (" +
                                  std::to_string(d) + " > q=" + std::to_string(inst.capacity) + ")");
    }
    auto reach = inst.graph.reachable_from(inst.sink);
    for (auto [s, d] : inst.sources) {
        (void)d;
        if (!reach[s])
            diag.issues.push_back("infeasible: no path from source " + std::to_string(s) +
                                  " to sink");
    }
    for (const auto& c : inst.graph.node_cost)
        if (c < 0) diag.issues.push_back("negative node cost");
    return diag;
}

Diagnostics validate_instance(const McncInstance& inst) {
    Diagnostics diag;
    std::map<NodeId, int> uses;
    for (const auto& p : inst.pairs) {
        uses[p.source]++;
        uses[p.sink]++;
        if (p.demand != 1) diag.issues.push_back("pair with non-unit demand");
        if (p.demand > inst.capacity) diag.issues.push_back("demand exceeds capacity");
    }
    for (auto [v, count] : uses)
        if (count > 1)
            diag.issues.push_back("duplicate terminal " + std::to_string(v) +
                                  " (constructor should have inserted a pendant dummy)");
    for (const auto& p : inst.pairs) {
        auto reach = inst.graph.reachable_from(p.source);
        if (!reach[p.sink])
            diag.issues.push_back("infeasible: no path between pair (" + std::to_string(p.source) +
                                  "," + std::to_string(p.sink) + ")");
    }
    for (const auto& c : inst.graph.node_cost)
        if (c < 0) diag.issues.push_back("negative node cost");
    return diag;
}

}  // namespace ncnd
