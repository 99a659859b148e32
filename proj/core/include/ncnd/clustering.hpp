#pragma once

#include "ncnd/audit.hpp"
#include "ncnd/flow.hpp"
#include "ncnd/instances.hpp"
#include "ncnd/steiner.hpp"

#include <optional>
#include <vector>

namespace ncnd {

/// Low-load set cover instance over tree-sets: groundset = graph nodes
/// (capacitated, except the sink) plus the W-elements (required, zero cost).
struct LlscInstance {
    const SsncInstance* inst = nullptr;
    WElements welems;
    std::int64_t load_bound_p = 1;  // ceil(log2 q) + 1

    std::int64_t groundset_size() const {
        return inst->graph.node_count() + welems.count();
    }
};

LlscInstance build_llsc(const SsncInstance& inst);

struct CoverTree {
    std::vector<NodeId> nodes;     // graph nodes, connected
    std::vector<int> covered;      // W-elements newly covered by this tree
    std::vector<int> all_welems;   // every W-element of sources in the tree
    NodeId root = -1;
    int family = 0;
    Rational cost;                 // instance node costs over `nodes`
};

struct LlscCover {
    std::vector<CoverTree> trees;             // chronological
    std::vector<std::int64_t> load;           // per graph node
    Rational total_cost;                      // sum of tree costs (with multiplicity)
    std::int64_t max_load = 0;
};

struct LlscKnobs {
    std::int64_t hard_cap_factor = 4;  // exclusion at load >= factor * p * ceil(log2 |U|)
};

/// Greedy min-density cover with load-based inflation: beta_v = c_v until
/// load(v) reaches p, then c_v * 2^load(v); hard exclusion past the cap.
LlscCover llsc_solve(const LlscInstance& llsc, const LlscKnobs& knobs = {});

/// A subtree plus its assigned sources.
struct Cluster {
    std::vector<NodeId> tree;                          // sorted, connected
    std::vector<std::pair<int, std::int64_t>> assigned;  // (source id, demand)
    std::optional<NodeId> root;

    std::int64_t demand() const {
        std::int64_t d = 0;
        for (auto [s, x] : assigned) d += x;
        return d;
    }
    bool contains(NodeId v) const;
};

/// One full pass of the merge loop: groups the sources at deepest merge
/// points of the flow, emits clusters of demand >= q (or sink-containing,
/// partitioned by sink branches), and returns the small clusters to recurse
/// on together with their suffix flows.
struct ClusterStepResult {
    std::vector<Cluster> output;
    std::vector<Cluster> small;          // parallel to next_x
    std::vector<NodeId> next_x;
    std::vector<std::int64_t> next_d;
    SplittableFlow suffix_flow;          // demands indexed like next_x
    // Grouping details for the multicommodity merge step:
    std::vector<std::vector<int>> groups;   // indices into the input X
    std::vector<NodeId> centers;            // deepest merge node per group
    std::vector<std::vector<NodeId>> tau;   // merge trees (node sets, disjoint)
};

ClusterStepResult cluster_step(const std::vector<NodeId>& X, const std::vector<std::int64_t>& d,
                               const UnsplittableFlow& F, const std::vector<Cluster>& trees,
                               std::int64_t q, NodeId sink);

/// Full recursion with the unsplittable re-conversion between passes.
/// Checks: recursion depth <= ceil(log2 q), disjoint merge trees, demand
/// bounds, unique assignment. Records them in `ledger` when given.
std::vector<Cluster> cluster_recursive(const std::vector<NodeId>& X,
                                       const std::vector<std::int64_t>& d,
                                       const UnsplittableFlow& F,
                                       const std::vector<Cluster>& trees, std::int64_t q,
                                       NodeId sink, AuditLedger* ledger = nullptr);

struct FindClustersResult {
    std::vector<Cluster> clusters;
    Rational clustering_cost;            // LLSC cover cost (with multiplicity)
    std::int64_t max_node_tree_count = 0;
    AuditLedger ledger;
};

/// End-to-end clustering of a single-sink instance: LLSC cover via the
/// max-density oracle, then de-duplication so each terminal is assigned to
/// exactly one cluster (clusters that fall below q are topped up from or
/// merged with an overlapping cluster).
FindClustersResult find_clusters(const SsncInstance& inst, const LlscKnobs& knobs = {});

}  // namespace ncnd
