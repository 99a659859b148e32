#pragma once

#include "ncnd/errors.hpp"
#include "ncnd/graph.hpp"
#include "ncnd/instances.hpp"

#include <vector>

namespace ncnd {

struct PnwstQuery {
    const UndirectedMultigraph* graph = nullptr;
    std::vector<Rational> beta;       // per node, >= 0
    NodeId root = 0;
    std::vector<char> is_terminal;    // per node
    std::int64_t target = 0;          // at least this many terminals
};

struct PnwstResult {
    std::vector<NodeId> tree;  // sorted; connected, contains root
    Rational cost;             // beta over tree nodes
    std::int64_t terminals_covered = 0;
};

/// Partial node-weighted Steiner tree: quota-aware greedy spider merge
/// followed by a tree-DP prune. Throws InfeasibleError when the root's
/// component cannot reach `target` terminals.
PnwstResult pnwst_approx(const PnwstQuery& q);

/// One groundset element per unit of demand of each source ("W-elements").
struct WElements {
    std::vector<int> source_of;                // element -> index into inst.sources
    std::vector<std::vector<int>> of_source;   // source index -> element ids

    static WElements build(const SsncInstance& inst);
    int count() const { return static_cast<int>(source_of.size()); }
};

struct DensityCandidate {
    std::vector<NodeId> tree;          // graph nodes, sorted; connected
    std::vector<int> covered;          // newly covered W-element ids
    std::vector<int> all_welems;       // every W-element of sources in the tree
    Rational cost;                     // beta over tree nodes
    Rational density;                  // cost / |covered|
    int family = 0;                    // 1: >= q demand, 2: contains the sink
    NodeId root = -1;
};

/// Max-density tree oracle over the two tree families (>= q uncovered demand
/// rooted off-sink; any demand rooted at the sink), each solved by a
/// root x target sweep of pnwst_approx on the pendant-augmented graph.
/// Nodes with `excluded` set are unusable (the set-cover's hard load cap).
/// Throws InfeasibleError when no family-valid tree exists.
DensityCandidate max_density_tree(const SsncInstance& inst, const WElements& welems,
                                  const std::vector<Rational>& beta,
                                  const std::vector<char>& covered,
                                  const std::vector<char>* excluded = nullptr);

}  // namespace ncnd
