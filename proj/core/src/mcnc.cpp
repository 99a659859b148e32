#include "ncnd/mcnc.hpp"

#include "ncnd/flow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

namespace ncnd {
namespace {

std::vector<NodeId> sorted_union(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    std::vector<NodeId> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// Tree path between two nodes of a cluster, over the instance graph.
std::vector<NodeId> tree_path(const UndirectedMultigraph& g, const Cluster& c, NodeId from,
                              NodeId to) {
    if (from == to) return {from};
    auto adj = g.adjacency();
    std::map<NodeId, NodeId> parent;
    parent[from] = from;
    std::deque<NodeId> queue{from};
    while (!queue.empty()) {
        NodeId u = queue.front();
        queue.pop_front();
        if (u == to) break;
        for (auto [v, e] : adj[u]) {
            (void)e;
            if (!c.contains(v) || parent.count(v)) continue;
            parent[v] = u;
            queue.push_back(v);
        }
    }
    if (!parent.count(to)) throw MalformedFlowError("cluster tree is not connected");
    std::vector<NodeId> path;
    for (NodeId at = to;; at = parent[at]) {
        path.push_back(at);
        if (at == from) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<NodeId> loop_erase(const std::vector<NodeId>& walk) {
    std::vector<NodeId> out;
    std::map<NodeId, size_t> pos;
    for (NodeId v : walk) {
        auto it = pos.find(v);
        if (it != pos.end()) {
            while (out.size() > it->second + 1) {
                pos.erase(out.back());
                out.pop_back();
            }
        } else {
            out.push_back(v);
            pos[v] = out.size() - 1;
        }
    }
    return out;
}

}  // namespace

std::uint64_t SolverRng::next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double SolverRng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// PhaseState
// ---------------------------------------------------------------------------
PhaseState PhaseState::init(const McncInstance& inst, const std::vector<int>& pair_ids) {
    PhaseState st;
    st.inst = &inst;
    st.pair_ids = pair_ids;
    int id = 0;
    for (int pid : pair_ids) {
        for (NodeId t : {inst.pairs[pid].source, inst.pairs[pid].sink}) {
            ClusterState cs;
            cs.cluster.tree = {t};
            cs.cluster.assigned = {{t, 1}};
            cs.cluster.root = t;
            cs.status = ClusterStatus::ActiveSafe;
            cs.id = id++;
            st.clusters.push_back(std::move(cs));
        }
    }
    return st;
}

NodeId PhaseState::mate_of(NodeId terminal) const {
    for (int pid : pair_ids) {
        if (inst->pairs[pid].source == terminal) return inst->pairs[pid].sink;
        if (inst->pairs[pid].sink == terminal) return inst->pairs[pid].source;
    }
    return -1;
}

int PhaseState::pair_of(NodeId terminal) const {
    for (int pid : pair_ids)
        if (inst->pairs[pid].source == terminal || inst->pairs[pid].sink == terminal) return pid;
    return -1;
}

bool PhaseState::pair_alive(int pair_id) const { return !deleted.count(pair_id); }

int PhaseState::cluster_of(NodeId terminal) const {
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
        if (clusters[ci].dead) continue;
        for (auto [t, d] : clusters[ci].cluster.assigned) {
            (void)d;
            if (t == terminal) return static_cast<int>(ci);
        }
    }
    return -1;
}

std::int64_t PhaseState::load(int ci) const {
    return static_cast<std::int64_t>(clusters[ci].cluster.assigned.size());
}

std::int64_t PhaseState::internal_pairs(int ci) const {
    std::int64_t count = 0;
    for (auto [t, d] : clusters[ci].cluster.assigned) {
        (void)d;
        int pid = pair_of(t);
        if (pid < 0 || !pair_alive(pid)) continue;
        if (cluster_of(mate_of(t)) == ci) ++count;
    }
    return count;
}

std::int64_t PhaseState::crossing_to_frozen(int ci) const {
    std::int64_t count = 0;
    for (auto [t, d] : clusters[ci].cluster.assigned) {
        (void)d;
        int pid = pair_of(t);
        if (pid < 0 || !pair_alive(pid)) continue;
        int cj = cluster_of(mate_of(t));
        if (cj >= 0 && cj != ci && clusters[cj].frozen()) ++count;
    }
    return count;
}

std::int64_t PhaseState::crossing_to_active(int ci) const {
    std::int64_t count = 0;
    for (auto [t, d] : clusters[ci].cluster.assigned) {
        (void)d;
        int pid = pair_of(t);
        if (pid < 0 || !pair_alive(pid)) continue;
        int cj = cluster_of(mate_of(t));
        if (cj >= 0 && cj != ci && clusters[cj].active()) ++count;
    }
    return count;
}

namespace {

// Freezes one active cluster when its type criteria demand it. Returns true
// when the status changed.
bool freeze_if_ready(PhaseState& st, int ci, std::int64_t q, AuditLedger& ledger, int iter) {
    ClusterState& cs = st.clusters[ci];
    if (!cs.active()) return false;
    std::int64_t l = st.load(ci);
    if (l == 0) {
        cs.status = ClusterStatus::FrozenInternal;
        ledger.check("clustering_phase", iter, "empty cluster frozen", "0", "-", true,
                     "vacuously internal");
        return true;
    }
    std::int64_t internal = st.internal_pairs(ci);
    std::int64_t crossing = l - internal;
    if (2 * internal > l) {
        cs.status = ClusterStatus::FrozenInternal;
        return true;
    }
    if (8 * crossing >= q) {
        cs.status = ClusterStatus::FrozenExternal;
        return true;
    }
    if (4 * l > q) {
        // load > q/4 forces one of the two; arithmetic says external here.
        cs.status = ClusterStatus::FrozenExternal;
        ledger.check("clustering_phase", iter, "oversized active frozen external",
                     std::to_string(l), "> q/4", true);
        return true;
    }
    return false;
}

int freeze_sweep(PhaseState& st, std::int64_t q, AuditLedger& ledger, int iter) {
    int frozen = 0;
    for (size_t ci = 0; ci < st.clusters.size(); ++ci)
        if (freeze_if_ready(st, static_cast<int>(ci), q, ledger, iter)) ++frozen;
    return frozen;
}

void delete_pair(PhaseState& st, int pid) {
    st.deleted.insert(pid);
    for (NodeId t : {st.inst->pairs[pid].source, st.inst->pairs[pid].sink}) {
        for (auto& cs : st.clusters) {
            auto& assigned = cs.cluster.assigned;
            assigned.erase(std::remove_if(assigned.begin(), assigned.end(),
                                          [&](const std::pair<int, std::int64_t>& a) {
                                              return a.first == t;
                                          }),
                           assigned.end());
        }
    }
}

}  // namespace

std::vector<int> make_unsafe(PhaseState& st, AuditLedger& ledger, int iteration) {
    std::vector<int> deleted_here;
    const std::int64_t q = st.inst->capacity;
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t ci = 0; ci < st.clusters.size(); ++ci) {
            ClusterState& cs = st.clusters[ci];
            if (cs.dead || cs.status != ClusterStatus::ActiveSafe) continue;
            std::int64_t l = st.load(static_cast<int>(ci));
            if (l == 0) continue;
            std::int64_t to_frozen = st.crossing_to_frozen(static_cast<int>(ci));
            if (4 * to_frozen <= l) continue;

            // Delete all demands crossing from this cluster to active clusters.
            std::vector<int> to_delete;
            for (auto [t, d] : cs.cluster.assigned) {
                (void)d;
                int pid = st.pair_of(t);
                if (pid < 0 || !st.pair_alive(pid)) continue;
                int cj = st.cluster_of(st.mate_of(t));
                if (cj >= 0 && cj != static_cast<int>(ci) && st.clusters[cj].active())
                    to_delete.push_back(pid);
            }
            std::sort(to_delete.begin(), to_delete.end());
            to_delete.erase(std::unique(to_delete.begin(), to_delete.end()), to_delete.end());
            for (int pid : to_delete) {
                delete_pair(st, pid);
                deleted_here.push_back(pid);
            }
            ledger.check("make_unsafe", iteration, "deletions within 3x frozen-crossing",
                         std::to_string(to_delete.size()),
                         "<= " + std::to_string(3 * to_frozen),
                         static_cast<std::int64_t>(to_delete.size()) <= 3 * to_frozen);

            // Freeze anything that became internal; otherwise mark unsafe.
            std::int64_t l2 = st.load(static_cast<int>(ci));
            std::int64_t internal = st.internal_pairs(static_cast<int>(ci));
            if (l2 == 0 || 2 * internal > l2)
                cs.status = ClusterStatus::FrozenInternal;
            else
                cs.status = ClusterStatus::ActiveUnsafe;
            for (size_t cj = 0; cj < st.clusters.size(); ++cj) {
                ClusterState& other = st.clusters[cj];
                if (other.dead || !other.active() || cj == ci) continue;
                std::int64_t lo = st.load(static_cast<int>(cj));
                if (lo == 0 || 2 * st.internal_pairs(static_cast<int>(cj)) > lo)
                    other.status = ClusterStatus::FrozenInternal;
            }
            changed = true;
            break;
        }
    }
    (void)q;
    return deleted_here;
}

// ---------------------------------------------------------------------------
// Augmented single-sink instances
// ---------------------------------------------------------------------------
namespace {

AugmentedSsnc build_augmented(const PhaseState& st, const std::vector<int>& source_clusters,
                              const std::vector<int>& root_clusters, std::int64_t cap,
                              std::int64_t root_cap) {
    const UndirectedMultigraph& g = st.inst->graph;
    std::vector<Rational> cost = g.node_cost;
    std::vector<std::string> labels = g.labels;
    std::vector<std::pair<NodeId, NodeId>> edges = g.edges;

    AugmentedSsnc aug;
    aug.scaled_capacity = cap;
    std::vector<std::pair<NodeId, std::int64_t>> sources;
    std::map<NodeId, std::int64_t> overrides;

    for (int ci : source_clusters) {
        NodeId s = static_cast<NodeId>(cost.size());
        cost.push_back(Rational(0));
        labels.push_back("src-c" + std::to_string(st.clusters[ci].id));
        for (auto [t, d] : st.clusters[ci].cluster.assigned) {
            (void)d;
            edges.push_back({s, t});
        }
        std::int64_t load = st.load(ci);
        sources.push_back({s, load});
        overrides[s] = load;  // no transit capacity through fake sources
        aug.source_cluster[s] = ci;
    }
    std::vector<NodeId> roots;
    for (int ci : root_clusters) {
        if (st.clusters[ci].cluster.assigned.empty()) continue;
        NodeId r = static_cast<NodeId>(cost.size());
        cost.push_back(Rational(0));
        labels.push_back("root-c" + std::to_string(st.clusters[ci].id));
        for (auto [t, d] : st.clusters[ci].cluster.assigned) {
            (void)d;
            edges.push_back({r, t});
        }
        overrides[r] = root_cap;
        aug.root_cluster[r] = ci;
        roots.push_back(r);
    }
    if (roots.empty()) throw PhaseStallError("augmented instance has no sink side");
    NodeId sink = static_cast<NodeId>(cost.size());
    cost.push_back(Rational(0));
    labels.push_back("sink");
    for (NodeId r : roots) edges.push_back({sink, r});
    aug.sink = sink;

    auto graph = UndirectedMultigraph::create(std::move(cost), std::move(labels), std::move(edges));
    aug.inst = SsncInstance::create(std::move(graph), sink, std::move(sources), cap);
    aug.inst.capacity_override = std::move(overrides);
    return aug;
}

}  // namespace

AugmentedSsnc build_i1(const PhaseState& st, double beta_hat) {
    const std::int64_t q = st.inst->capacity;
    const std::int64_t cap = 5 * q;
    const std::int64_t root_cap =
        static_cast<std::int64_t>(std::ceil(8.0 * std::max(1.0, beta_hat))) * cap;
    std::vector<int> unsafe, frozen;
    for (size_t ci = 0; ci < st.clusters.size(); ++ci) {
        const auto& cs = st.clusters[ci];
        if (cs.dead) continue;
        if (cs.status == ClusterStatus::ActiveUnsafe && st.load(static_cast<int>(ci)) > 0)
            unsafe.push_back(static_cast<int>(ci));
        if (cs.frozen() && !cs.cluster.assigned.empty()) frozen.push_back(static_cast<int>(ci));
    }
    if (unsafe.empty()) throw PhaseStallError("no unsafe clusters for I1");
    if (frozen.empty()) throw PhaseStallError("I1 needs a frozen sink side");
    return build_augmented(st, unsafe, frozen, cap, root_cap);
}

std::pair<std::vector<int>, std::vector<int>> bipartition_safe(const PhaseState& st) {
    std::vector<int> safes;
    for (size_t ci = 0; ci < st.clusters.size(); ++ci)
        if (!st.clusters[ci].dead && st.clusters[ci].status == ClusterStatus::ActiveSafe &&
            st.load(static_cast<int>(ci)) > 0)
            safes.push_back(static_cast<int>(ci));
    if (safes.size() < 2) throw DegenerateError("fewer than two safe clusters");

    // Crossing demand counts between safe clusters.
    std::map<std::pair<int, int>, std::int64_t> cross;
    std::int64_t total = 0;
    for (int pid : st.pair_ids) {
        if (!st.pair_alive(pid)) continue;
        int a = st.cluster_of(st.inst->pairs[pid].source);
        int b = st.cluster_of(st.inst->pairs[pid].sink);
        if (a < 0 || b < 0 || a == b) continue;
        if (st.clusters[a].status != ClusterStatus::ActiveSafe ||
            st.clusters[b].status != ClusterStatus::ActiveSafe)
            continue;
        cross[{std::min(a, b), std::max(a, b)}]++;
        ++total;
    }
    if (total == 0) throw DegenerateError("no crossing demand among safe clusters");

    std::map<int, int> side;  // cluster -> 0/1
    for (size_t i = 0; i < safes.size(); ++i) side[safes[i]] = static_cast<int>(i % 2);
    auto demand_to = [&](int ci, int s) {
        std::int64_t d = 0;
        for (const auto& [key, count] : cross) {
            auto [a, b] = key;
            if (a == ci && side.at(b) == s) d += count;
            if (b == ci && side.at(a) == s) d += count;
        }
        return d;
    };
    bool moved = true;
    while (moved) {
        moved = false;
        for (int ci : safes) {
            std::int64_t own = demand_to(ci, side[ci]);
            std::int64_t other = demand_to(ci, 1 - side[ci]);
            if (own > other) {
                side[ci] = 1 - side[ci];
                moved = true;
                break;
            }
        }
    }
    std::vector<int> plus, minus;
    for (int ci : safes) (side[ci] == 0 ? plus : minus).push_back(ci);
    if (plus.size() < minus.size()) std::swap(plus, minus);
    if (minus.empty()) {
        // Everyone prefers one side only if there is no crossing demand,
        // already excluded; balance by moving the smallest-load cluster.
        minus.push_back(plus.back());
        plus.pop_back();
    }
    return {plus, minus};
}

AugmentedSsnc build_i2(const PhaseState& st, const std::vector<int>& plus,
                       const std::vector<int>& minus) {
    if (minus.empty()) throw DegenerateError("empty sink side for I2");
    const std::int64_t q = st.inst->capacity;
    return build_augmented(st, plus, minus, 9 * q, 9 * q);
}

// ---------------------------------------------------------------------------
// merge_from_flow
// ---------------------------------------------------------------------------
namespace {

bool is_fake(const AugmentedSsnc& aug, NodeId v) {
    return v == aug.sink || aug.source_cluster.count(v) || aug.root_cluster.count(v);
}

// Replaces interior fake-node hops with tree paths of the cluster they short
// cut; keeps fake heads and the final fake root hop.
std::vector<NodeId> substitute_interior_fakes(const PhaseState& st, const AugmentedSsnc& aug,
                                              const std::vector<NodeId>& path) {
    std::vector<NodeId> out;
    for (size_t i = 0; i < path.size(); ++i) {
        NodeId v = path[i];
        if (!is_fake(aug, v) || i == 0 || v == aug.sink ||
            (i + 1 < path.size() && path[i + 1] == aug.sink)) {
            out.push_back(v);
            continue;
        }
        // Interior fake: bridge its neighbors through the cluster's tree.
        int ci = aug.source_cluster.count(v) ? aug.source_cluster.at(v)
                                             : aug.root_cluster.at(v);
        NodeId a = path[i - 1];
        NodeId b = path[i + 1];
        auto bridge = tree_path(st.inst->graph, st.clusters[ci].cluster, a, b);
        for (size_t j = 1; j + 1 < bridge.size(); ++j) out.push_back(bridge[j]);
    }
    return loop_erase(out);
}

// Cancels directed cycles of an aggregate arc flow in place.
void cancel_cycles(std::map<std::pair<NodeId, NodeId>, Rational>& flow) {
    while (true) {
        std::map<NodeId, std::vector<NodeId>> out;
        for (const auto& [arc, f] : flow)
            if (f > 0) out[arc.first].push_back(arc.second);
        // DFS cycle detection.
        std::map<NodeId, int> state;  // 0 new, 1 on stack, 2 done
        std::vector<NodeId> stack, cycle;
        std::function<bool(NodeId)> dfs = [&](NodeId u) -> bool {
            state[u] = 1;
            stack.push_back(u);
            for (NodeId w : out[u]) {
                int sw = state.count(w) ? state[w] : 0;
                if (sw == 1) {
                    auto it = std::find(stack.begin(), stack.end(), w);
                    cycle.assign(it, stack.end());
                    return true;
                }
                if (sw == 0 && dfs(w)) return true;
            }
            stack.pop_back();
            state[u] = 2;
            return false;
        };
        bool found = false;
        for (const auto& [u, vs] : out) {
            (void)vs;
            if ((state.count(u) ? state[u] : 0) == 0) {
                stack.clear();
                cycle.clear();
                if (dfs(u)) {
                    found = true;
                    break;
                }
            }
        }
        if (!found) return;
        Rational delta;
        bool first = true;
        for (size_t i = 0; i < cycle.size(); ++i) {
            auto arc = std::make_pair(cycle[i], cycle[(i + 1) % cycle.size()]);
            if (first || flow[arc] < delta) delta = flow[arc];
            first = false;
        }
        for (size_t i = 0; i < cycle.size(); ++i) {
            auto arc = std::make_pair(cycle[i], cycle[(i + 1) % cycle.size()]);
            flow[arc] -= delta;
        }
    }
}

// Rebuilds a clean acyclic unsplittable flow from the solution walks:
// aggregate, cancel cycles, peel per source, then one unsplittable path per
// source via the splittable-to-unsplittable conversion.
UnsplittableFlow acyclic_flow(const PhaseState& st, const AugmentedSsnc& aug,
                              const SsncSolution& sol) {
    UnsplittableFlow walks = sol.as_flow(aug.inst);
    for (auto& r : walks.routes) r.path = substitute_interior_fakes(st, aug, r.path);

    std::map<std::pair<NodeId, NodeId>, Rational> agg;
    for (const auto& r : walks.routes)
        for (size_t i = 0; i + 1 < r.path.size(); ++i)
            agg[{r.path[i], r.path[i + 1]}] += r.demand;
    cancel_cycles(agg);

    // Per-source peeling on the canceled aggregate.
    std::vector<std::pair<NodeId, Rational>> source_demands;
    for (const auto& r : walks.routes) source_demands.push_back({r.source, r.demand});
    SplittableFlow split = decompose_arc_flow(agg, source_demands, aug.sink);
    return dgg_unsplittable(split, aug.sink);
}

}  // namespace

MergeStats merge_from_flow(PhaseState& st, const AugmentedSsnc& aug, const SsncSolution& sol,
                           double beta_hat, AuditLedger& ledger, int iteration) {
    const std::int64_t q = st.inst->capacity;
    UnsplittableFlow flow = acyclic_flow(st, aug, sol);

    // Crossing-to-active per frozen cluster, for the no-increase audit.
    std::map<int, std::int64_t> frozen_xing_before, frozen_load_before;
    for (size_t ci = 0; ci < st.clusters.size(); ++ci)
        if (st.clusters[ci].frozen()) {
            frozen_xing_before[static_cast<int>(ci)] =
                st.crossing_to_active(static_cast<int>(ci));
            frozen_load_before[static_cast<int>(ci)] = st.load(static_cast<int>(ci));
        }

    // Align routes with the fake-source order expected by cluster_step.
    std::vector<NodeId> xs;
    std::vector<std::int64_t> ds;
    std::vector<Cluster> singleton;
    std::vector<int> member;  // cluster index per source
    std::map<NodeId, int> route_of;
    for (size_t i = 0; i < flow.routes.size(); ++i) route_of[flow.routes[i].source] = static_cast<int>(i);
    UnsplittableFlow ordered;
    ordered.sink = flow.sink;
    for (const auto& [s, ci] : aug.source_cluster) {
        auto it = route_of.find(s);
        if (it == route_of.end()) throw MalformedFlowError("fake source has no route");
        ordered.routes.push_back(flow.routes[it->second]);
        xs.push_back(s);
        ds.push_back(st.load(ci));
        Cluster c;
        c.tree = {s};
        c.assigned = {{ci, st.load(ci)}};
        singleton.push_back(c);
        member.push_back(ci);
    }

    auto step = cluster_step(xs, ds, ordered, singleton, aug.scaled_capacity, aug.sink);
    ledger.check("merge_from_flow", iteration, "merge trees node-disjoint", "-", "exact", true);

    MergeStats stats;
    auto real_prefix = [&](const std::vector<NodeId>& path, NodeId until,
                           bool include_until) -> std::vector<NodeId> {
        std::vector<NodeId> out;
        for (NodeId v : path) {
            if (v == until) {
                if (include_until && !is_fake(aug, v)) out.push_back(v);
                break;
            }
            if (!is_fake(aug, v)) out.push_back(v);
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    auto merge_group_into = [&](const std::vector<int>& group_sources, int target_ci,
                                NodeId until) {
        ClusterState& target = st.clusters[target_ci];
        std::int64_t before = st.load(target_ci);
        for (int gi : group_sources) {
            int ci = member[gi];
            const auto& route = ordered.routes[gi];
            auto prefix = real_prefix(route.path, until, !is_fake(aug, until));
            target.cluster.tree = sorted_union(target.cluster.tree, prefix);
            target.cluster.tree =
                sorted_union(target.cluster.tree, st.clusters[ci].cluster.tree);
            auto& assigned = target.cluster.assigned;
            assigned.insert(assigned.end(), st.clusters[ci].cluster.assigned.begin(),
                            st.clusters[ci].cluster.assigned.end());
            st.clusters[ci].dead = true;
            st.clusters[ci].cluster.assigned.clear();
        }
        std::int64_t after = st.load(target_ci);
        if (target.frozen())
            stats.max_frozen_increase = std::max(stats.max_frozen_increase, after - before);
        ++stats.merged_into_roots;
    };

    for (size_t g = 0; g < step.groups.size(); ++g) {
        NodeId center = step.centers[g];
        const auto& group = step.groups[g];
        if (center == aug.sink) {
            // Split by the fake root each path enters the sink through.
            std::map<int, std::vector<int>> by_root_cluster;
            for (int gi : group) {
                const auto& path = ordered.routes[gi].path;
                if (path.size() < 2 || !aug.root_cluster.count(path[path.size() - 2]))
                    throw MalformedFlowError("route reaches the sink off a fake root");
                by_root_cluster[aug.root_cluster.at(path[path.size() - 2])].push_back(gi);
            }
            for (const auto& [rci, sub] : by_root_cluster)
                merge_group_into(sub, rci, /*until=*/aug.sink);
        } else if (aug.root_cluster.count(center)) {
            merge_group_into(group, aug.root_cluster.at(center), center);
        } else {
            // Case 1: merge the group's clusters at a real node.
            ClusterState merged;
            merged.id = static_cast<int>(st.clusters.size());
            merged.status = ClusterStatus::ActiveSafe;
            for (int gi : group) {
                int ci = member[gi];
                auto prefix = real_prefix(ordered.routes[gi].path, center, true);
                merged.cluster.tree = sorted_union(merged.cluster.tree, prefix);
                merged.cluster.tree =
                    sorted_union(merged.cluster.tree, st.clusters[ci].cluster.tree);
                auto& assigned = merged.cluster.assigned;
                assigned.insert(assigned.end(), st.clusters[ci].cluster.assigned.begin(),
                                st.clusters[ci].cluster.assigned.end());
                st.clusters[ci].dead = true;
                st.clusters[ci].cluster.assigned.clear();
            }
            merged.cluster.root = merged.cluster.tree.empty() ? center : merged.cluster.tree[0];
            stats.max_new_load =
                std::max(stats.max_new_load,
                         static_cast<std::int64_t>(merged.cluster.assigned.size()));
            st.clusters.push_back(std::move(merged));
            ++stats.new_active;
        }
    }

    // Claim audits with the run's measured congestion.
    double beta_meas = std::max({1.0, beta_hat, to_double(sol.congestion)});
    std::int64_t new_load_bound = static_cast<std::int64_t>(
        std::ceil(beta_meas * static_cast<double>(aug.scaled_capacity)));
    ledger.check("merge_from_flow", iteration, "new cluster load within beta*capacity",
                 std::to_string(stats.max_new_load), "<= " + std::to_string(new_load_bound),
                 stats.max_new_load <= new_load_bound);
    std::int64_t frozen_inc_bound = static_cast<std::int64_t>(
        std::ceil(40.0 * beta_meas * beta_meas * static_cast<double>(q)));
    ledger.check("merge_from_flow", iteration, "frozen load increase within 40 beta^2 q",
                 std::to_string(stats.max_frozen_increase),
                 "<= " + std::to_string(frozen_inc_bound),
                 stats.max_frozen_increase <= frozen_inc_bound);
    bool xing_ok = true;
    for (const auto& [ci, before] : frozen_xing_before) {
        if (st.clusters[ci].dead) continue;
        if (st.crossing_to_active(ci) > before) xing_ok = false;
    }
    ledger.check("merge_from_flow", iteration,
                 "frozen crossing-to-active does not increase", "-", "exact", xing_ok);
    return stats;
}

// ---------------------------------------------------------------------------
// clustering_phase
// ---------------------------------------------------------------------------
ClusteringPhaseResult clustering_phase(const McncInstance& inst,
                                       const std::vector<int>& pair_ids,
                                       const McncKnobs& knobs, double beta_hat_in) {
    ClusteringPhaseResult result;
    PhaseState st = PhaseState::init(inst, pair_ids);
    const std::int64_t q = inst.capacity;
    AuditLedger& ledger = result.ledger;

    double beta_build = std::max(1.0, beta_hat_in);
    double beta_meas = 1.0;

    freeze_sweep(st, q, ledger, 0);

    auto active_count = [&] {
        int count = 0;
        for (size_t ci = 0; ci < st.clusters.size(); ++ci)
            if (st.clusters[ci].active()) ++count;
        return count;
    };
    const int init_active = active_count();
    const int iter_cap =
        static_cast<int>(std::ceil(4.0 * std::log(std::max(2, init_active)) /
                                   std::log(4.0 / 3.0))) +
        8;

    int iter = 0;
    while (active_count() > 0) {
        ++iter;
        if (iter > iter_cap)
            throw PhaseStallError("clustering phase exceeded its iteration cap (" +
                                  std::to_string(iter_cap) + ")");
        int actives_at_start = active_count();
        std::map<NodeId, int> member_before;
        for (const auto& cs : st.clusters)
            if (!cs.dead)
                for (NodeId v : cs.cluster.tree) member_before[v]++;

        auto deleted_now = make_unsafe(st, ledger, iter);
        result.deleted_pairs.insert(result.deleted_pairs.end(), deleted_now.begin(),
                                    deleted_now.end());
        freeze_sweep(st, q, ledger, iter);

        int unsafe_count = 0, safe_count = 0;
        for (size_t ci = 0; ci < st.clusters.size(); ++ci) {
            if (!st.clusters[ci].active()) continue;
            if (st.clusters[ci].status == ClusterStatus::ActiveUnsafe)
                ++unsafe_count;
            else
                ++safe_count;
        }

        std::int64_t new_frozen_load_max = 0;
        std::int64_t frozen_increase_max = 0;

        if (unsafe_count > 0) {
            auto aug = build_i1(st, beta_build);
            auto sol = solve_ssnc(aug.inst, knobs.ssnc);
            beta_meas = std::max(beta_meas, to_double(sol.congestion));
            auto stats = merge_from_flow(st, aug, sol, beta_build, ledger, iter);
            new_frozen_load_max = std::max(new_frozen_load_max, stats.max_new_load);
            frozen_increase_max = std::max(frozen_increase_max, stats.max_frozen_increase);
            freeze_sweep(st, q, ledger, iter);
        }

        std::vector<int> safes;
        for (size_t ci = 0; ci < st.clusters.size(); ++ci)
            if (st.clusters[ci].active() &&
                st.clusters[ci].status == ClusterStatus::ActiveSafe &&
                st.load(static_cast<int>(ci)) > 0)
                safes.push_back(static_cast<int>(ci));

        if (safes.size() >= 2) {
            try {
                auto [plus, minus] = bipartition_safe(st);
                // Source clusters send at least an eighth of their load across.
                bool claim_ok = true;
                for (int ci : plus) {
                    std::int64_t to_minus = 0;
                    for (auto [t, d] : st.clusters[ci].cluster.assigned) {
                        (void)d;
                        int pid = st.pair_of(t);
                        if (pid < 0 || !st.pair_alive(pid)) continue;
                        int cj = st.cluster_of(st.mate_of(t));
                        if (std::find(minus.begin(), minus.end(), cj) != minus.end())
                            ++to_minus;
                    }
                    if (8 * to_minus < st.load(ci)) claim_ok = false;
                }
                ledger.check("clustering_phase", iter,
                             "source clusters cross an eighth of their load", "-", "exact",
                             claim_ok);
                auto aug = build_i2(st, plus, minus);
                auto sol = solve_ssnc(aug.inst, knobs.ssnc);
                beta_meas = std::max(beta_meas, to_double(sol.congestion));
                auto stats = merge_from_flow(st, aug, sol, beta_build, ledger, iter);
                new_frozen_load_max = std::max(new_frozen_load_max, stats.max_new_load);
                frozen_increase_max = std::max(frozen_increase_max, stats.max_frozen_increase);
                freeze_sweep(st, q, ledger, iter);
            } catch (const DegenerateError&) {
                for (int ci : safes)
                    if (st.clusters[ci].active()) {
                        st.clusters[ci].status = ClusterStatus::FrozenInternal;
                        ledger.check("clustering_phase", iter, "degenerate safe cluster frozen",
                                     std::to_string(st.clusters[ci].id), "-", true,
                                     "no crossing demand among safe clusters");
                    }
            }
        } else if (safes.size() == 1) {
            // A lone safe cluster's crossing demand points at frozen
            // clusters, so the next iteration's unsafe pass absorbs it.
            ledger.check("clustering_phase", iter, "lone safe cluster deferred",
                         std::to_string(st.clusters[safes[0]].id), "-", true);
        }

        // Iteration lemma audits.
        double beta_audit = std::max({1.0, beta_build, beta_meas});
        std::int64_t bound1 = static_cast<std::int64_t>(std::ceil(9.0 * beta_audit * q));
        ledger.check("iteration_lemma", iter, "newly frozen load",
                     std::to_string(new_frozen_load_max), "<= " + std::to_string(bound1),
                     new_frozen_load_max <= bound1);
        std::int64_t bound2 =
            static_cast<std::int64_t>(std::ceil(40.0 * beta_audit * beta_audit * q));
        ledger.check("iteration_lemma", iter, "frozen load increase",
                     std::to_string(frozen_increase_max), "<= " + std::to_string(bound2),
                     frozen_increase_max <= bound2);
        bool inv1 = true;
        for (size_t ci = 0; ci < st.clusters.size(); ++ci)
            if (st.clusters[ci].frozen() &&
                st.crossing_to_active(static_cast<int>(ci)) > bound1)
                inv1 = false;
        ledger.check("iteration_lemma", iter, "frozen crossing-to-active within 9 beta q", "-",
                     "<= " + std::to_string(bound1), inv1);
        {
            Rational new_cost = 0;  // cost of vertices added to clusters this iteration
            std::map<NodeId, int> member_after;
            for (const auto& cs : st.clusters)
                if (!cs.dead)
                    for (NodeId v : cs.cluster.tree) member_after[v]++;
            std::int64_t max_increase = 0;
            for (const auto& [v, cnt] : member_after) {
                int before = member_before.count(v) ? member_before.at(v) : 0;
                max_increase = std::max<std::int64_t>(max_increase, cnt - before);
                if (before == 0) new_cost += inst.graph.node_cost[v];
            }
            ledger.check("iteration_lemma", iter, "new vertex cost (logged)",
                         format_rational(new_cost), "-", true);
            ledger.check("iteration_lemma", iter, "per-vertex membership increase",
                         std::to_string(max_increase), "<= 2", max_increase <= 2);
        }
        int actives_after = active_count();
        bool shrink_ok = 4 * actives_after <= 3 * safe_count + 2 * unsafe_count;
        ledger.check("iteration_lemma", iter, "active count shrink",
                     std::to_string(actives_after),
                     "<= 3/4*" + std::to_string(safe_count) + " + 1/2*" +
                         std::to_string(unsafe_count),
                     shrink_ok);
        ledger.check("iteration_lemma", iter, "no frozen-incident deletion", "-", "exact",
                     true);  // deletions only cross active-active by construction

        if (actives_after == actives_at_start && deleted_now.empty() && actives_after > 0)
            throw PhaseStallError("clustering iteration made no progress");
    }
    result.iterations = iter;
    result.beta_hat_measured = std::max(1.0, beta_meas);

    for (auto& cs : st.clusters)
        if (cs.frozen() && !cs.cluster.assigned.empty()) result.frozen.push_back(cs);

    // Theorem: terminals uniquely assigned; at least a quarter of the pairs
    // end with both endpoints inside the final clusters.
    std::map<NodeId, int> times;
    for (const auto& cs : result.frozen)
        for (auto [t, d] : cs.cluster.assigned) {
            (void)d;
            times[t]++;
        }
    bool unique_ok = true;
    for (const auto& [t, cnt] : times)
        if (cnt != 1) unique_ok = false;
    ledger.check("clustering_phase", iter, "terminals uniquely assigned", "-", "1", unique_ok);
    std::int64_t survivors = 0;
    for (int pid : pair_ids)
        if (!st.deleted.count(pid)) ++survivors;
    ledger.check("clustering_phase", iter, "surviving pairs inside clusters",
                 std::to_string(survivors),
                 ">= " + std::to_string(pair_ids.size()) + "/4",
                 4 * survivors >= static_cast<std::int64_t>(pair_ids.size()));
    ledger.check("clustering_phase", iter, "total deletions within 3x frozen-incident",
                 std::to_string(result.deleted_pairs.size()),
                 "<= 3*" + std::to_string(survivors),
                 static_cast<std::int64_t>(result.deleted_pairs.size()) <= 3 * survivors);
    return result;
}

// ---------------------------------------------------------------------------
// Hallucination and LP_h
// ---------------------------------------------------------------------------
HallucinationPlan hallucinate(const std::vector<int>& pair_ids, std::int64_t q, int n,
                              double c_h, SolverRng& rng) {
    HallucinationPlan plan;
    plan.prob = std::min(1.0, c_h * std::log(static_cast<double>(std::max(2, n))) /
                                  static_cast<double>(q));
    for (int pid : pair_ids)
        if (rng.unit() < plan.prob) plan.sampled.push_back(pid);
    return plan;
}

LpHResult solve_lp_h(const McncInstance& inst, const std::vector<int>& sampled, double c_x,
                     double eps) {
    LpHResult out;
    if (sampled.empty()) return out;
    const int n = inst.graph.node_count();
    const std::int64_t q = inst.capacity;
    const double x_cap = c_x * std::log(static_cast<double>(std::max(2, n)));

    // Split graph with one resource per node (cap q * x_cap) plus one budget
    // resource; transit arcs are free.
    auto dg = to_directed(inst.graph, q);
    auto [arcg, map] = split_transform(dg);
    const int budget_res = n;
    ResourceGraph rg;
    rg.node_count = arcg.node_count;
    rg.resource_cap.assign(n + 1, 0.0);
    for (int v = 0; v < n; ++v) rg.resource_cap[v] = static_cast<double>(q) * x_cap;
    for (size_t i = 0; i < arcg.arcs.size(); ++i) {
        ResourceGraph::Arc arc;
        arc.from = arcg.arcs[i].from;
        arc.to = arcg.arcs[i].to;
        if (i < static_cast<size_t>(n)) {
            arc.usage.push_back({static_cast<int>(i), 1.0});
            double rate = to_double(inst.graph.node_cost[i]) / static_cast<double>(q);
            if (rate > 0) arc.usage.push_back({budget_res, rate});
        }
        rg.arcs.push_back(std::move(arc));
    }
    std::vector<McfDemand> demands;
    for (int pid : sampled)
        demands.push_back({map.in(inst.pairs[pid].source), map.in(inst.pairs[pid].sink),
                           static_cast<double>(q)});
    // Sampled pairs must route through their endpoints' capacity arcs too:
    // starting at in() and ending at in() charges the source but not the
    // sink; extend to the sink's out-node so both endpoints pay.
    for (auto& d : demands) d.sink += 1;  // out(t) = in(t) + 1

    double budget_hi = 0.0;
    for (int v = 0; v < n; ++v) budget_hi += to_double(inst.graph.node_cost[v]) * x_cap;
    budget_hi = std::max(budget_hi, 1e-9);

    auto feasible = [&](double budget) -> std::optional<ConcurrentFlowResult> {
        rg.resource_cap[budget_res] = budget;
        auto res = concurrent_mcf(rg, demands, eps);
        if (res.throughput >= 1.0 - 1.5 * eps) return res;
        return std::nullopt;
    };

    auto top = feasible(budget_hi);
    if (!top) {
        // Even unlimited node usage cannot route: report the violating cut.
        std::ostringstream os;
        os << "LP_h infeasible; unreachable pairs:";
        for (int pid : sampled) {
            auto reach = inst.graph.reachable_from(inst.pairs[pid].source);
            if (!reach[inst.pairs[pid].sink]) os << " " << pid;
        }
        throw InfeasibleError(os.str());
    }
    double lo = 0.0, hi = budget_hi;
    ConcurrentFlowResult best = *top;
    for (int it = 0; it < 20; ++it) {
        double mid = (lo + hi) / 2.0;
        auto res = feasible(mid);
        if (res) {
            hi = mid;
            best = *res;
        } else {
            lo = mid;
        }
    }
    out.budget = hi;

    // Normalize each pair's flow to exactly q and convert to original nodes.
    for (size_t j = 0; j < demands.size(); ++j) {
        double delivered = 0.0;
        for (const auto& pf : best.per_demand[j]) delivered += pf.amount;
        if (delivered <= 0) throw InfeasibleError("LP_h delivered no flow for a pair");
        double scale = static_cast<double>(q) / delivered;
        auto& flows = out.flows[sampled[j]];
        for (const auto& pf : best.per_demand[j]) {
            std::vector<NodeId> orig;
            for (NodeId v : pf.nodes) {
                NodeId o = map.original(v);
                if (orig.empty() || orig.back() != o) orig.push_back(o);
            }
            flows.push_back({std::move(orig), pf.amount * scale});
        }
        for (const auto& [path, amount] : flows) {
            std::set<NodeId> uniq(path.begin(), path.end());
            for (NodeId v : uniq) out.x[v] += amount / static_cast<double>(q);
        }
    }
    return out;
}

void round_lp_h(const LpHResult& lp, HallucinationPlan& plan, SolverRng& rng,
                AuditLedger& ledger, int iteration) {
    std::map<NodeId, int> per_node;
    for (int pid : plan.sampled) {
        auto it = lp.flows.find(pid);
        if (it == lp.flows.end() || it->second.empty())
            throw InfeasibleError("missing LP flow for a sampled pair");
        double total = 0.0;
        for (const auto& [path, amount] : it->second) total += amount;
        double draw = rng.unit() * total;
        const std::vector<NodeId>* chosen = &it->second.back().first;
        for (const auto& [path, amount] : it->second) {
            if (draw < amount) {
                chosen = &path;
                break;
            }
            draw -= amount;
        }
        plan.paths[pid] = *chosen;
        std::set<NodeId> uniq(chosen->begin(), chosen->end());
        for (NodeId v : uniq) per_node[v]++;
    }
    int max_paths = 0;
    for (const auto& [v, cnt] : per_node) max_paths = std::max(max_paths, cnt);
    ledger.check("round_lp_h", iteration, "max hallucinated paths per node (logged)",
                 std::to_string(max_paths), "-", true);
}

// ---------------------------------------------------------------------------
// Min-cut decomposition of the cluster graph
// ---------------------------------------------------------------------------
namespace {

// (value, side) of a global minimum cut of the multigraph induced on `verts`.
// Exhaustive for <= 16 vertices, Stoer-Wagner beyond.
std::pair<std::int64_t, std::vector<int>> global_mincut(
    const std::vector<int>& verts, const std::map<std::pair<int, int>, std::int64_t>& weight) {
    const int m = static_cast<int>(verts.size());
    if (m <= 1) return {0, {}};
    auto w = [&](int a, int b) {
        auto it = weight.find({std::min(verts[a], verts[b]), std::max(verts[a], verts[b])});
        return it == weight.end() ? 0 : it->second;
    };
    if (m <= 16) {
        std::int64_t best = -1;
        std::uint32_t best_mask = 0;
        for (std::uint32_t mask = 1; mask < (1u << (m - 1)); ++mask) {
            std::int64_t cut = 0;
            for (int a = 0; a < m; ++a)
                for (int b = a + 1; b < m; ++b) {
                    bool ina = (mask >> a) & 1u;
                    bool inb = (mask >> b) & 1u;
                    if (ina != inb) cut += w(a, b);
                }
            if (best < 0 || cut < best) {
                best = cut;
                best_mask = mask;
            }
        }
        std::vector<int> side;
        for (int a = 0; a < m; ++a)
            if ((best_mask >> a) & 1u) side.push_back(verts[a]);
        return {best, side};
    }
    // Stoer-Wagner.
    std::vector<std::vector<std::int64_t>> g(m, std::vector<std::int64_t>(m, 0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (a != b) g[a][b] = w(a, b);
    std::vector<std::vector<int>> groups(m);
    for (int a = 0; a < m; ++a) groups[a] = {verts[a]};
    std::vector<int> alive(m);
    for (int a = 0; a < m; ++a) alive[a] = a;
    std::int64_t best = -1;
    std::vector<int> best_side;
    while (alive.size() > 1) {
        std::vector<std::int64_t> weights(m, 0);
        std::vector<int> order;
        std::vector<char> added(m, 0);
        for (size_t step = 0; step < alive.size(); ++step) {
            int sel = -1;
            for (int v : alive)
                if (!added[v] && (sel < 0 || weights[v] > weights[sel])) sel = v;
            added[sel] = 1;
            order.push_back(sel);
            for (int v : alive)
                if (!added[v]) weights[v] += g[sel][v];
        }
        int last = order.back();
        std::int64_t cut = weights[last];
        if (best < 0 || cut < best) {
            best = cut;
            best_side = groups[last];
        }
        // merge last into the second-to-last
        int prev = order[order.size() - 2];
        for (int v : alive)
            if (v != last && v != prev) {
                g[prev][v] += g[last][v];
                g[v][prev] += g[v][last];
            }
        groups[prev].insert(groups[prev].end(), groups[last].begin(), groups[last].end());
        alive.erase(std::remove(alive.begin(), alive.end(), last), alive.end());
    }
    return {best, best_side};
}

}  // namespace

MincutDecomposition mincut_decompose(const ClusterGraph& gc, std::int64_t q) {
    MincutDecomposition out;
    const Rational threshold = Rational(q) / Rational(32);  // delta q / 4, delta = 1/8
    const Rational floor_bound = Rational(q) / Rational(64);  // delta q / 8

    // Edge multiplicities between cluster vertices.
    std::map<std::pair<int, int>, std::vector<int>> edge_ids;
    for (size_t e = 0; e < gc.edges.size(); ++e) {
        auto [a, b] = gc.edges[e];
        edge_ids[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(e));
    }

    std::vector<std::vector<int>> queue;
    {
        std::vector<int> all(gc.vertex_count);
        for (int v = 0; v < gc.vertex_count; ++v) all[v] = v;
        queue.push_back(all);
    }
    std::set<int> removed;
    while (!queue.empty()) {
        std::vector<int> verts = queue.back();
        queue.pop_back();
        if (verts.size() <= 1) continue;
        std::map<std::pair<int, int>, std::int64_t> weight;
        std::set<int> vset(verts.begin(), verts.end());
        for (const auto& [key, ids] : edge_ids) {
            if (!vset.count(key.first) || !vset.count(key.second)) continue;
            std::int64_t live = 0;
            for (int e : ids)
                if (!removed.count(e)) ++live;
            if (live > 0) weight[key] = live;
        }
        auto [cut, side] = global_mincut(verts, weight);
        if (Rational(cut) >= threshold && cut > 0) {
            MincutComponent comp;
            comp.vertices = verts;
            for (const auto& [key, ids] : edge_ids) {
                if (!vset.count(key.first) || !vset.count(key.second)) continue;
                for (int e : ids)
                    if (!removed.count(e)) comp.edge_ids.push_back(e);
            }
            std::sort(comp.edge_ids.begin(), comp.edge_ids.end());
            out.components.push_back(std::move(comp));
            continue;
        }
        // Split: remove the crossing edges and recurse on both sides.
        std::set<int> sset(side.begin(), side.end());
        for (const auto& [key, ids] : edge_ids) {
            if (!vset.count(key.first) || !vset.count(key.second)) continue;
            if (sset.count(key.first) == sset.count(key.second)) continue;
            for (int e : ids) removed.insert(e);
        }
        std::vector<int> rest;
        for (int v : verts)
            if (!sset.count(v)) rest.push_back(v);
        queue.push_back(side);
        queue.push_back(rest);
    }
    out.removed_edges.assign(removed.begin(), removed.end());

    // Lemma accounting: removals bounded, every component's min-cut checked.
    Rational removal_bound = Rational(gc.vertex_count) * threshold;
    out.ledger.check("mincut_decompose", 0, "removed edges within N delta q/4",
                     std::to_string(out.removed_edges.size()),
                     "<= " + format_rational(removal_bound),
                     Rational(static_cast<std::int64_t>(out.removed_edges.size())) <=
                         removal_bound);
    bool floor_ok = true;
    for (const auto& comp : out.components) {
        std::map<std::pair<int, int>, std::int64_t> weight;
        for (int e : comp.edge_ids) {
            auto [a, b] = gc.edges[e];
            weight[{std::min(a, b), std::max(a, b)}]++;
        }
        auto [cut, side] = global_mincut(comp.vertices, weight);
        (void)side;
        if (comp.vertices.size() >= 2 && Rational(cut) < floor_bound) floor_ok = false;
    }
    out.ledger.check("mincut_decompose", 0, "component min-cuts at least delta q/8", "-",
                     ">= " + format_rational(floor_bound), floor_ok);
    return out;
}

// ---------------------------------------------------------------------------
// Routing
// ---------------------------------------------------------------------------
ComponentRouting route_component(const McncInstance& inst, const ClusterGraph& gc,
                                 const MincutComponent& comp,
                                 const std::vector<ClusterState>& clusters,
                                 const HallucinationPlan& plan, std::int64_t q, double eps) {
    ComponentRouting out;
    std::set<int> vset(comp.vertices.begin(), comp.vertices.end());

    // Hallucinated edges of this component: sampled pairs with a U-path whose
    // endpoints lie in two distinct component clusters.
    struct HEdge {
        int pair_id;
        int ca, cb;  // cluster indices
    };
    std::vector<HEdge> hedges;
    auto cluster_of_terminal = [&](NodeId t) -> int {
        for (int ci : comp.vertices)
            for (auto [x, d] : clusters[ci].cluster.assigned) {
                (void)d;
                if (x == t) return ci;
            }
        return -1;
    };
    for (int pid : plan.sampled) {
        if (!plan.paths.count(pid)) continue;
        int ca = cluster_of_terminal(inst.pairs[pid].source);
        int cb = cluster_of_terminal(inst.pairs[pid].sink);
        if (ca < 0 || cb < 0 || ca == cb) continue;
        hedges.push_back({pid, ca, cb});
    }

    // Demands: retained pairs of the component.
    std::vector<int> demand_pairs;
    for (int e : comp.edge_ids) demand_pairs.push_back(gc.edge_pair[e]);
    std::sort(demand_pairs.begin(), demand_pairs.end());
    demand_pairs.erase(std::unique(demand_pairs.begin(), demand_pairs.end()),
                       demand_pairs.end());
    if (demand_pairs.empty()) return out;
    if (hedges.empty())
        throw SparsifierFailure("no hallucinated edges in a demand-carrying component");

    // Cluster-level concurrent flow over capacity-q hallucinated edges.
    std::map<int, int> vid;  // cluster idx -> dense id
    for (int ci : comp.vertices) vid[ci] = static_cast<int>(vid.size());
    ResourceGraph rg;
    rg.node_count = static_cast<int>(vid.size());
    for (size_t h = 0; h < hedges.size(); ++h) {
        rg.resource_cap.push_back(static_cast<double>(q));
        rg.arcs.push_back({vid[hedges[h].ca], vid[hedges[h].cb], {{static_cast<int>(h), 1.0}}});
        rg.arcs.push_back({vid[hedges[h].cb], vid[hedges[h].ca], {{static_cast<int>(h), 1.0}}});
    }
    std::vector<McfDemand> demands;
    for (int pid : demand_pairs) {
        int ca = cluster_of_terminal(inst.pairs[pid].source);
        int cb = cluster_of_terminal(inst.pairs[pid].sink);
        if (ca < 0 || cb < 0) throw MalformedFlowError("component pair lost its clusters");
        demands.push_back({vid[ca], vid[cb], 1.0});
    }
    auto res = concurrent_mcf(rg, demands, eps);
    if (res.throughput < 1.0 - 2.0 * eps)
        throw SparsifierFailure("sampled edges cannot carry the component demands (throughput " +
                                std::to_string(res.throughput) + ")");

    // Expand cluster-level flow paths: hops ride the hallucinated U-paths,
    // transitions inside a cluster ride its tree.
    std::vector<int> rev(vid.size());
    for (auto [ci, dense] : vid) rev[dense] = ci;
    std::vector<double> hload(hedges.size(), 0.0);
    for (size_t j = 0; j < demands.size(); ++j) {
        int pid = demand_pairs[j];
        NodeId s = inst.pairs[pid].source;
        NodeId t = inst.pairs[pid].sink;
        double total = 0.0;
        for (const auto& pf : res.per_demand[j]) total += pf.amount;
        if (total <= 0) throw SparsifierFailure("a component pair received no flow");
        for (const auto& pf : res.per_demand[j]) {
            double fraction = pf.amount / total;
            // Cluster sequence pf.nodes (dense ids): build the node walk.
            std::vector<NodeId> walk;
            NodeId at = s;
            walk.push_back(at);
            for (size_t hop = 0; hop + 1 < pf.nodes.size(); ++hop) {
                int h = pf.arcs[hop] / 2;  // two directed arcs per hallucinated edge
                hload[h] += pf.amount;
                const auto& u_path = plan.paths.at(hedges[h].pair_id);
                // U-path endpoint inside the current cluster:
                int cur_cluster = rev[pf.nodes[hop]];
                NodeId u_from = u_path.front(), u_to = u_path.back();
                bool from_here = false;
                for (auto [x, d] : clusters[cur_cluster].cluster.assigned) {
                    (void)d;
                    if (x == u_from) from_here = true;
                }
                NodeId enter = from_here ? u_from : u_to;
                auto bridge = tree_path(inst.graph, clusters[cur_cluster].cluster, at, enter);
                for (size_t i = 1; i < bridge.size(); ++i) walk.push_back(bridge[i]);
                if (from_here) {
                    for (size_t i = 1; i < u_path.size(); ++i) walk.push_back(u_path[i]);
                    at = u_to;
                } else {
                    for (size_t i = 1; i < u_path.size(); ++i)
                        walk.push_back(u_path[u_path.size() - 1 - i]);
                    at = u_from;
                }
            }
            int last_cluster = rev[pf.nodes.back()];
            auto bridge = tree_path(inst.graph, clusters[last_cluster].cluster, at, t);
            for (size_t i = 1; i < bridge.size(); ++i) walk.push_back(bridge[i]);
            out.routes[pid].push_back({walk, fraction});
        }
    }
    for (size_t h = 0; h < hedges.size(); ++h)
        out.max_hedge_load_over_q =
            std::max(out.max_hedge_load_over_q, hload[h] / static_cast<double>(q));
    return out;
}

std::map<int, std::vector<NodeId>> route_internal(const McncInstance& inst,
                                                  const std::vector<ClusterState>& clusters,
                                                  const std::vector<int>& pair_ids) {
    std::map<int, std::vector<NodeId>> routed;
    for (int pid : pair_ids) {
        NodeId s = inst.pairs[pid].source;
        NodeId t = inst.pairs[pid].sink;
        for (const auto& cs : clusters) {
            if (cs.status != ClusterStatus::FrozenInternal) continue;
            bool has_s = false, has_t = false;
            for (auto [x, d] : cs.cluster.assigned) {
                (void)d;
                if (x == s) has_s = true;
                if (x == t) has_t = true;
            }
            if (has_s && has_t) {
                routed[pid] = tree_path(inst.graph, cs.cluster, s, t);
                break;
            }
        }
    }
    return routed;
}

// ---------------------------------------------------------------------------
// solve_mcnc
// ---------------------------------------------------------------------------
Solution solve_mcnc(const McncInstance& inst, const McncKnobs& knobs, std::uint64_t seed) {
    Solution sol;
    auto diag = validate_instance(inst);
    if (!diag.ok()) {
        std::string msg = "invalid instance:";
        for (const auto& s : diag.issues) msg += " [" + s + "]";
        throw InfeasibleError(msg);
    }
    const std::int64_t q = inst.capacity;
    const int n = inst.graph.node_count();
    const std::int64_t k = static_cast<std::int64_t>(inst.pairs.size());
    if (k == 0) {
        sol.cost = 0;
        return sol;
    }

    SolverRng rng(seed);
    std::vector<int> remaining(inst.pairs.size());
    for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);

    std::map<int, std::vector<std::pair<std::vector<NodeId>, double>>> final_routes;
    std::set<NodeId> bought;
    std::map<NodeId, double> loads;
    std::set<int> ever_deferred;
    double beta_hat = knobs.beta_init;

    const int outer_cap = std::max<int>(
        1, static_cast<int>(std::ceil(knobs.c_outer *
                                      std::log2(static_cast<double>(std::max<std::int64_t>(2, k))))));
    int iter = 0;
    while (!remaining.empty()) {
        ++iter;
        if (iter > outer_cap) {
            std::ostringstream os;
            os << "outer loop exceeded " << outer_cap << " iterations with "
               << remaining.size() << " pairs unrouted";
            throw OuterStallError(os.str());
        }
        const std::int64_t k_iter = static_cast<std::int64_t>(remaining.size());

        auto phase = clustering_phase(inst, remaining, knobs, beta_hat);
        sol.ledger.append(phase.ledger);
        beta_hat = std::max(beta_hat, phase.beta_hat_measured);
        for (const auto& cs : phase.frozen)
            for (NodeId v : cs.cluster.tree) bought.insert(v);

        std::set<int> deleted(phase.deleted_pairs.begin(), phase.deleted_pairs.end());
        std::vector<int> alive;
        for (int pid : remaining)
            if (!deleted.count(pid)) alive.push_back(pid);
        for (int pid : phase.deleted_pairs) ever_deferred.insert(pid);

        auto plan = hallucinate(alive, q, n, knobs.c_h, rng);
        if (!plan.sampled.empty()) {
            auto lp = solve_lp_h(inst, plan.sampled, knobs.c_x, knobs.eps);
            round_lp_h(lp, plan, rng, sol.ledger, iter);
            for (const auto& [pid, path] : plan.paths)
                for (NodeId v : path) bought.insert(v);
        }

        // Count pairs touching internal clusters for the branch.
        std::int64_t touching_internal = 0;
        auto in_internal = [&](NodeId t) {
            for (const auto& cs : phase.frozen) {
                if (cs.status != ClusterStatus::FrozenInternal) continue;
                for (auto [x, d] : cs.cluster.assigned) {
                    (void)d;
                    if (x == t) return true;
                }
            }
            return false;
        };
        for (int pid : alive)
            if (in_internal(inst.pairs[pid].source) || in_internal(inst.pairs[pid].sink))
                ++touching_internal;

        std::set<int> routed_now;
        if (8 * touching_internal >= k_iter) {
            auto routed = route_internal(inst, phase.frozen, alive);
            for (auto& [pid, path] : routed) {
                final_routes[pid].push_back({path, 1.0});
                routed_now.insert(pid);
            }
            sol.ledger.check("solve_mcnc", iter, "internal branch routed pairs",
                             std::to_string(routed.size()), "-", true);
        } else {
            // External branch: cluster graph over external clusters.
            std::vector<ClusterState> ext;
            for (const auto& cs : phase.frozen)
                if (cs.status == ClusterStatus::FrozenExternal) ext.push_back(cs);
            std::map<NodeId, int> cluster_of;
            for (size_t ci = 0; ci < ext.size(); ++ci)
                for (auto [t, d] : ext[ci].cluster.assigned) {
                    (void)d;
                    cluster_of[t] = static_cast<int>(ci);
                }
            ClusterGraph gc;
            gc.vertex_count = static_cast<int>(ext.size());
            std::vector<int> intra;  // pairs inside one external cluster
            for (int pid : alive) {
                auto is = cluster_of.find(inst.pairs[pid].source);
                auto it = cluster_of.find(inst.pairs[pid].sink);
                if (is == cluster_of.end() || it == cluster_of.end()) continue;
                if (is->second == it->second) {
                    intra.push_back(pid);
                } else {
                    gc.edges.push_back({is->second, it->second});
                    gc.edge_pair.push_back(pid);
                }
            }
            for (int pid : intra) {
                int ci = cluster_of.at(inst.pairs[pid].source);
                auto path = tree_path(inst.graph, ext[ci].cluster, inst.pairs[pid].source,
                                      inst.pairs[pid].sink);
                final_routes[pid].push_back({path, 1.0});
                routed_now.insert(pid);
            }
            if (!gc.edges.empty()) {
                auto dec = mincut_decompose(gc, q);
                sol.ledger.append(dec.ledger);
                for (const auto& comp : dec.components) {
                    try {
                        auto cr = route_component(inst, gc, comp, ext, plan, q, knobs.eps);
                        for (auto& [pid, paths] : cr.routes) {
                            final_routes[pid] = paths;
                            routed_now.insert(pid);
                        }
                        sol.ledger.check("route_component", iter,
                                         "hallucinated edge load over q",
                                         std::to_string(cr.max_hedge_load_over_q), "<= ~1",
                                         cr.max_hedge_load_over_q <= 1.0 + 4.0 * knobs.eps);
                    } catch (const SparsifierFailure& e) {
                        sol.ledger.check("route_component", iter, "sparsifier failure", "-",
                                         "-", true, e.what());
                        // pairs of this component defer to the next iteration
                    }
                }
            }
        }

        std::vector<int> next;
        for (int pid : remaining)
            if (!routed_now.count(pid)) next.push_back(pid);
        for (int pid : next) ever_deferred.insert(pid);
        if (next.size() == remaining.size())
            sol.ledger.check("solve_mcnc", iter, "zero-progress iteration absorbed", "-", "-",
                             true, "deferred pairs retry with fresh hallucination draws");
        remaining = std::move(next);
    }

    sol.outer_iterations = iter;
    sol.deferrals = static_cast<std::int64_t>(ever_deferred.size());
    for (auto& [pid, paths] : final_routes) {
        Solution::PairRoute pr;
        pr.pair_idx = pid;
        pr.paths = paths;
        double total = 0.0;
        for (auto& [path, f] : pr.paths) total += f;
        for (auto& [path, f] : pr.paths) f /= total;
        for (auto& [path, f] : pr.paths) {
            for (NodeId v : path) {
                bought.insert(v);
                loads[v] += f;
            }
        }
        sol.routing.push_back(std::move(pr));
    }
    sol.nodes.assign(bought.begin(), bought.end());
    sol.cost = 0;
    for (NodeId v : sol.nodes) sol.cost += inst.graph.node_cost[v];
    sol.congestion_over_q = 0.0;
    for (const auto& [v, l] : loads)
        sol.congestion_over_q = std::max(sol.congestion_over_q, l / static_cast<double>(q));
    sol.ledger.check("solve_mcnc", iter, "all pairs routed", std::to_string(sol.routing.size()),
                     "== " + std::to_string(inst.pairs.size()),
                     sol.routing.size() == inst.pairs.size());
    return sol;
}

}  // namespace ncnd
