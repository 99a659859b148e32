#pragma once

#include "ncnd/graph.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ncnd {

struct RequestPair {
    NodeId source;
    NodeId sink;
    std::int64_t demand = 1;
};

/// Single-sink instance. The sink is treated as zero cost and unbounded
/// capacity regardless of the stored graph values.
struct SsncInstance {
    UndirectedMultigraph graph;
    NodeId sink = 0;
    std::vector<std::pair<NodeId, std::int64_t>> sources;  // (node, demand)
    std::int64_t capacity = 1;                              // q

    /// Capacity overrides for augmented nodes (fake roots / fake sources of
    /// the multicommodity sub-instances). Empty for user-facing instances.
    std::map<NodeId, std::int64_t> capacity_override;

    static SsncInstance create(UndirectedMultigraph graph, NodeId sink,
                               std::vector<std::pair<NodeId, std::int64_t>> sources,
                               std::int64_t capacity);

    std::int64_t capacity_of(NodeId v) const {
        if (v == sink) return kUnboundedCap;
        auto it = capacity_override.find(v);
        return it == capacity_override.end() ? capacity : it->second;
    }
    std::int64_t total_demand() const;
};

/// Multicommodity instance with unit demands. The constructor rewrites
/// terminals shared between pairs by inserting zero-cost pendant dummies, so
/// that each vertex is in at most one request pair; the rewrite is recorded
/// in dummy_of so solutions can be mapped back.
struct McncInstance {
    UndirectedMultigraph graph;
    std::vector<RequestPair> pairs;
    std::int64_t capacity = 1;
    std::vector<std::pair<NodeId, NodeId>> dummy_of;  // (dummy node, original node)

    static McncInstance create(UndirectedMultigraph graph, std::vector<RequestPair> pairs,
                               std::int64_t capacity);

    NodeId original_of(NodeId v) const;
};

struct Diagnostics {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
};

Diagnostics validate_instance(const SsncInstance& inst);
Diagnostics validate_instance(const McncInstance& inst);

}  // namespace ncnd
