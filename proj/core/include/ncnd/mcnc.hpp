#pragma once

#include "ncnd/audit.hpp"
#include "ncnd/clustering.hpp"
#include "ncnd/instances.hpp"
#include "ncnd/ssnc.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace ncnd {

enum class ClusterStatus { ActiveSafe, ActiveUnsafe, FrozenInternal, FrozenExternal };

struct ClusterState {
    Cluster cluster;  // assigned pairs are (terminal node, 1)
    ClusterStatus status = ClusterStatus::ActiveSafe;
    int id = -1;
    bool dead = false;  // merged away

    bool active() const {
        return !dead &&
               (status == ClusterStatus::ActiveSafe || status == ClusterStatus::ActiveUnsafe);
    }
    bool frozen() const { return !dead && !active(); }
};

struct McncKnobs {
    double c_h = 4.0;    // hallucination rate constant
    double c_x = 8.0;    // LP node-usage cap constant
    int c_outer = 8;     // outer iteration cap multiplier
    double eps = 0.05;   // concurrent-flow accuracy
    double beta_init = 2.0;  // initial congestion estimate for I1 fake roots
    SsncKnobs ssnc;
};

/// Terminal-level working state of one clustering phase.
struct PhaseState {
    const McncInstance* inst = nullptr;
    std::vector<int> pair_ids;          // pairs participating in this phase
    std::set<int> deleted;              // pair ids deleted during the phase
    std::vector<ClusterState> clusters;

    NodeId mate_of(NodeId terminal) const;
    int pair_of(NodeId terminal) const;       // -1 when not a live terminal
    int cluster_of(NodeId terminal) const;    // index into clusters, -1 if unassigned
    bool pair_alive(int pair_id) const;
    // Live terminals of cluster ci whose mates sit in clusters of the given
    // status class.
    std::int64_t crossing_to_frozen(int ci) const;
    std::int64_t crossing_to_active(int ci) const;
    std::int64_t internal_pairs(int ci) const;  // terminals with mates inside
    std::int64_t load(int ci) const;

    static PhaseState init(const McncInstance& inst, const std::vector<int>& pair_ids);
};

/// Repeatedly declares unsafe clusters and deletes their active-crossing
/// demands, freezing clusters that become internal. Returns deleted pair ids.
std::vector<int> make_unsafe(PhaseState& st, AuditLedger& ledger, int iteration);

/// Augmented single-sink instance (I1 for unsafe clusters, I2 for the safe
/// bipartition) plus bookkeeping to interpret its flow.
struct AugmentedSsnc {
    SsncInstance inst;
    NodeId sink = -1;
    std::map<NodeId, int> source_cluster;  // fake source node -> cluster index
    std::map<NodeId, int> root_cluster;    // fake root node -> cluster index
    std::int64_t scaled_capacity = 0;      // 5q for I1, 9q for I2
};

AugmentedSsnc build_i1(const PhaseState& st, double beta_hat);
AugmentedSsnc build_i2(const PhaseState& st, const std::vector<int>& plus,
                       const std::vector<int>& minus);

/// Bipartition of the safe clusters: every cluster has strictly more demand
/// to the opposite side; |plus| >= |minus|. Throws DegenerateError when there
/// is no crossing demand among fewer than two safe clusters.
std::pair<std::vector<int>, std::vector<int>> bipartition_safe(const PhaseState& st);

struct MergeStats {
    int new_active = 0;
    int merged_into_roots = 0;
    std::int64_t max_new_load = 0;
    std::int64_t max_frozen_increase = 0;
};

/// Runs one grouping pass of the Cluster algorithm on the sub-solve flow and
/// merges the corresponding clusters (case 1: at a real node; case 2: into
/// the cluster behind a fake root).
MergeStats merge_from_flow(PhaseState& st, const AugmentedSsnc& aug, const SsncSolution& sol,
                           double beta_hat, AuditLedger& ledger, int iteration);

struct ClusteringPhaseResult {
    std::vector<ClusterState> frozen;  // internal + external
    std::vector<int> deleted_pairs;
    int iterations = 0;
    double beta_hat_measured = 1.0;
    AuditLedger ledger;
};

ClusteringPhaseResult clustering_phase(const McncInstance& inst,
                                       const std::vector<int>& pair_ids,
                                       const McncKnobs& knobs, double beta_hat_in);

struct HallucinationPlan {
    std::vector<int> sampled;  // pair ids
    double prob = 0.0;
    std::map<int, std::vector<NodeId>> paths;  // filled by round_lp_h
};

/// Deterministic splittable RNG used across the solver.
struct SolverRng {
    std::uint64_t state;
    explicit SolverRng(std::uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ull) {}
    std::uint64_t next();
    double unit();
};

HallucinationPlan hallucinate(const std::vector<int>& pair_ids, std::int64_t q, int n,
                              double c_h, SolverRng& rng);

struct LpHResult {
    std::map<NodeId, double> x;
    // Per sampled pair (keyed by pair id): fractional paths carrying q total.
    std::map<int, std::vector<std::pair<std::vector<NodeId>, double>>> flows;
    double budget = 0.0;
};

LpHResult solve_lp_h(const McncInstance& inst, const std::vector<int>& sampled,
                     double c_x, double eps);

void round_lp_h(const LpHResult& lp, HallucinationPlan& plan, SolverRng& rng,
                AuditLedger& ledger, int iteration);

/// Cluster multigraph: one vertex per cluster, one edge per request pair with
/// endpoints in two distinct clusters.
struct ClusterGraph {
    int vertex_count = 0;
    std::vector<std::pair<int, int>> edges;  // (cluster idx, cluster idx)
    std::vector<int> edge_pair;              // pair id per edge
};

struct MincutComponent {
    std::vector<int> vertices;   // cluster indices
    std::vector<int> edge_ids;   // retained edge indices into the ClusterGraph
};

struct MincutDecomposition {
    std::vector<MincutComponent> components;  // non-singleton, mincut >= q/64
    std::vector<int> removed_edges;           // edge indices
    AuditLedger ledger;
};

MincutDecomposition mincut_decompose(const ClusterGraph& gc, std::int64_t q);

struct ComponentRouting {
    // pair id -> fractional node-level paths summing to 1.
    std::map<int, std::vector<std::pair<std::vector<NodeId>, double>>> routes;
    double max_hedge_load_over_q = 0.0;
};

/// Routes every retained pair of the component through the hallucinated
/// edges (capacity q each) and the cluster trees. Throws SparsifierFailure
/// when the sampled edges cannot carry the demands.
ComponentRouting route_component(const McncInstance& inst, const ClusterGraph& gc,
                                 const MincutComponent& comp,
                                 const std::vector<ClusterState>& clusters,
                                 const HallucinationPlan& plan, std::int64_t q, double eps);

/// Routes pairs whose endpoints share an internal cluster along the tree.
std::map<int, std::vector<NodeId>> route_internal(const McncInstance& inst,
                                                  const std::vector<ClusterState>& clusters,
                                                  const std::vector<int>& pair_ids);

struct Solution {
    std::vector<NodeId> nodes;
    struct PairRoute {
        int pair_idx;
        std::vector<std::pair<std::vector<NodeId>, double>> paths;  // fractions sum to 1
    };
    std::vector<PairRoute> routing;
    Rational cost;
    double congestion_over_q = 0.0;
    int outer_iterations = 0;
    std::int64_t deferrals = 0;  // pairs pushed to a later iteration at least once
    AuditLedger ledger;
};

Solution solve_mcnc(const McncInstance& inst, const McncKnobs& knobs, std::uint64_t seed);

}  // namespace ncnd
