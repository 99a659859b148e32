#include "ncnd/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <set>

namespace ncnd {
namespace {

std::int64_t ceil_log2(std::int64_t x) {
    std::int64_t p = 0, v = 1;
    while (v < x) {
        v <<= 1;
        ++p;
    }
    return p;
}

std::int64_t demand_cap(std::int64_t q) {
    // q * (1 + log2 q), rounded up for non-powers of two.
    if (q <= 1) return std::max<std::int64_t>(q, 1);
    double cap = static_cast<double>(q) * (1.0 + std::log2(static_cast<double>(q)));
    return static_cast<std::int64_t>(std::ceil(cap - 1e-9));
}

}  // namespace

bool Cluster::contains(NodeId v) const {
    return std::binary_search(tree.begin(), tree.end(), v);
}

LlscInstance build_llsc(const SsncInstance& inst) {
    LlscInstance llsc;
    llsc.inst = &inst;
    llsc.welems = WElements::build(inst);
    llsc.load_bound_p = ceil_log2(inst.capacity) + 1;
    return llsc;
}

LlscCover llsc_solve(const LlscInstance& llsc, const LlscKnobs& knobs) {
    const SsncInstance& inst = *llsc.inst;
    const int n = inst.graph.node_count();
    const std::int64_t p = llsc.load_bound_p;
    const std::int64_t hard_cap =
        knobs.hard_cap_factor * p * std::max<std::int64_t>(1, ceil_log2(llsc.groundset_size()));

    LlscCover cover;
    cover.load.assign(n, 0);
    cover.total_cost = 0;
    std::vector<char> covered(llsc.welems.count(), 0);
    std::int64_t uncovered = llsc.welems.count();

    while (uncovered > 0) {
        std::vector<Rational> beta(n);
        std::vector<char> excluded(n, 0);
        for (int v = 0; v < n; ++v) {
            if (cover.load[v] < p)
                beta[v] = inst.graph.node_cost[v];
            else
                beta[v] = inst.graph.node_cost[v] * Rational(BigInt(1) << static_cast<unsigned>(
                                                                std::min<std::int64_t>(cover.load[v], 256)));
            if (v != inst.sink && cover.load[v] >= hard_cap) excluded[v] = 1;
        }

        DensityCandidate cand;
        try {
            cand = max_density_tree(inst, llsc.welems, beta, covered, &excluded);
        } catch (const InfeasibleError& e) {
            throw InfeasibleError(std::string("set cover stuck with uncovered elements: ") +
                                  e.what());
        }

        CoverTree tree;
        tree.nodes = cand.tree;
        tree.covered = cand.covered;
        tree.all_welems = cand.all_welems;
        tree.root = cand.family == 2 ? inst.sink : cand.root;
        tree.family = cand.family;
        tree.cost = 0;
        for (NodeId v : tree.nodes) tree.cost += inst.graph.node_cost[v];
        cover.total_cost += tree.cost;
        for (NodeId v : tree.nodes)
            if (v != inst.sink) cover.load[v]++;
        for (int e : cand.covered)
            if (!covered[e]) {
                covered[e] = 1;
                --uncovered;
            }
        cover.trees.push_back(std::move(tree));
    }
    for (int v = 0; v < n; ++v) cover.max_load = std::max(cover.max_load, cover.load[v]);
    return cover;
}

// ---------------------------------------------------------------------------
// Algorithm "Cluster": one pass of the merge loop.
// ---------------------------------------------------------------------------
namespace {

struct SupportDag {
    std::set<std::pair<NodeId, NodeId>> arcs;
    std::map<NodeId, std::int64_t> depth;  // longest path to the sink

    static SupportDag build(const UnsplittableFlow& F, NodeId sink) {
        SupportDag d;
        std::set<NodeId> nodes{sink};
        for (const auto& r : F.routes) {
            if (r.path.empty() || r.path.back() != sink)
                throw MalformedFlowError("route does not end at the sink");
            std::set<NodeId> on_path;
            for (NodeId v : r.path)
                if (!on_path.insert(v).second)
                    throw MalformedFlowError("route revisits a node (cycle)");
            for (size_t i = 0; i + 1 < r.path.size(); ++i)
                d.arcs.insert({r.path[i], r.path[i + 1]});
            for (NodeId v : r.path) nodes.insert(v);
        }
        // Kahn's algorithm; also detects cross-path cycles.
        std::map<NodeId, int> outdeg;
        std::map<NodeId, std::vector<NodeId>> preds;
        for (NodeId v : nodes) outdeg[v] = 0;
        for (auto [u, v] : d.arcs) {
            outdeg[u]++;
            preds[v].push_back(u);
        }
        std::deque<NodeId> ready;
        for (auto [v, deg] : outdeg)
            if (deg == 0) ready.push_back(v);
        size_t seen = 0;
        std::map<NodeId, std::int64_t> depth;
        for (NodeId v : nodes) depth[v] = 0;
        while (!ready.empty()) {
            NodeId v = ready.front();
            ready.pop_front();
            ++seen;
            for (NodeId u : preds[v]) {
                depth[u] = std::max(depth[u], depth[v] + 1);
                if (--outdeg[u] == 0) ready.push_back(u);
            }
        }
        if (seen != nodes.size())
            throw MalformedFlowError("flow support contains a directed cycle");
        d.depth = std::move(depth);
        return d;
    }
};

std::vector<NodeId> sorted_union(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    std::vector<NodeId> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

ClusterStepResult cluster_step(const std::vector<NodeId>& X, const std::vector<std::int64_t>& d,
                               const UnsplittableFlow& F, const std::vector<Cluster>& trees,
                               std::int64_t q, NodeId sink) {
    if (X.size() != d.size() || X.size() != F.routes.size() || X.size() != trees.size())
        throw std::invalid_argument("cluster_step inputs must be parallel");
    for (size_t i = 0; i < X.size(); ++i) {
        if (F.routes[i].source != X[i])
            throw MalformedFlowError("route order does not match the source list");
        if (F.routes[i].demand != Rational(d[i]))
            throw MalformedFlowError("route demand does not match the demand list");
    }
    SupportDag dag = SupportDag::build(F, sink);

    ClusterStepResult result;
    result.suffix_flow.sink = sink;

    std::set<int> remaining;
    for (size_t i = 0; i < X.size(); ++i) remaining.insert(static_cast<int>(i));
    std::set<NodeId> used_tau_nodes;  // disjointness check across groups

    while (!remaining.empty()) {
        // Distinct incoming support arcs carried by remaining routes.
        std::map<NodeId, std::set<NodeId>> preds;
        for (int i : remaining) {
            const auto& path = F.routes[i].path;
            for (size_t j = 0; j + 1 < path.size(); ++j) preds[path[j + 1]].insert(path[j]);
        }
        NodeId v = sink;
        std::int64_t best_depth = -1;
        for (const auto& [node, ps] : preds) {
            if (ps.size() < 2) continue;
            std::int64_t dep = dag.depth.at(node);
            if (dep > best_depth || (dep == best_depth && node < v)) {
                best_depth = dep;
                v = node;
            }
        }
        const bool no_merge = best_depth < 0;
        if (no_merge) v = sink;

        std::vector<int> group;
        for (int i : remaining)
            if (no_merge ||
                std::find(F.routes[i].path.begin(), F.routes[i].path.end(), v) !=
                    F.routes[i].path.end())
                group.push_back(i);

        // Prefixes of the group's paths until v form the merge tree tau_v.
        std::set<NodeId> tau_set;
        for (int i : group) {
            const auto& path = F.routes[i].path;
            for (NodeId node : path) {
                tau_set.insert(node);
                if (node == v) break;
            }
        }
        std::vector<NodeId> tau(tau_set.begin(), tau_set.end());
        for (NodeId node : tau)
            if (node != sink && !used_tau_nodes.insert(node).second)
                throw MalformedFlowError("merge trees are not node-disjoint");

        Cluster merged;
        merged.tree = tau;
        for (int i : group) {
            merged.tree = sorted_union(merged.tree, trees[i].tree);
            merged.assigned.insert(merged.assigned.end(), trees[i].assigned.begin(),
                                   trees[i].assigned.end());
        }
        merged.root = v;

        result.groups.push_back(group);
        result.centers.push_back(v);
        result.tau.push_back(tau);

        std::int64_t group_demand = 0;
        for (int i : group) group_demand += d[i];

        const bool has_sink = merged.contains(sink);
        if (group_demand >= q || has_sink) {
            if (!has_sink) {
                result.output.push_back(std::move(merged));
            } else {
                // Partition by the connected components of T(v) minus the
                // sink, then greedily pack whole components up to the demand
                // cap; parts share no node other than the sink.
                std::vector<NodeId> body;
                for (NodeId node : merged.tree)
                    if (node != sink) body.push_back(node);
                // Connectivity known to this pass: support arcs plus the fact
                // that every member tree is internally connected.
                std::map<NodeId, NodeId> uf;
                for (NodeId node : body) uf[node] = node;
                std::function<NodeId(NodeId)> find = [&](NodeId a) {
                    while (uf[a] != a) a = uf[a] = uf[uf[a]];
                    return a;
                };
                auto unite = [&](NodeId a, NodeId b) {
                    if (!uf.count(a) || !uf.count(b)) return;
                    a = find(a);
                    b = find(b);
                    if (a != b) uf[std::max(a, b)] = std::min(a, b);
                };
                for (auto [a, b] : dag.arcs) unite(a, b);
                for (int i : group)
                    for (size_t j = 0; j + 1 < trees[i].tree.size(); ++j)
                        unite(trees[i].tree[j], trees[i].tree[j + 1]);
                std::map<NodeId, int> comp_of;
                int comp_count = 0;
                for (NodeId node : body) {
                    NodeId rep = find(node);
                    if (!comp_of.count(rep)) comp_of[rep] = comp_count++;
                }
                for (NodeId node : body) comp_of[node] = comp_of.at(find(node));
                // Demand and membership per component.
                std::vector<std::int64_t> comp_demand(comp_count, 0);
                std::vector<std::vector<std::pair<int, std::int64_t>>> comp_assigned(comp_count);
                std::vector<std::vector<NodeId>> comp_nodes(comp_count);
                for (NodeId node : body) comp_nodes[comp_of[node]].push_back(node);
                for (int i : group) {
                    // A source lives in the component of its own node; fall
                    // back to its path's first node.
                    NodeId home = X[i];
                    int c = comp_of.count(home) ? comp_of[home] : comp_of[F.routes[i].path[0]];
                    for (auto [sid, dem] : trees[i].assigned) {
                        comp_assigned[c].push_back({sid, dem});
                        comp_demand[c] += dem;
                    }
                }
                const std::int64_t cap = demand_cap(q);
                Cluster part;
                std::int64_t part_demand = 0;
                auto flush = [&]() {
                    if (part.assigned.empty() && part.tree.empty()) return;
                    part.tree = sorted_union(part.tree, {sink});
                    part.root = sink;
                    result.output.push_back(std::move(part));
                    part = Cluster{};
                    part_demand = 0;
                };
                for (int c = 0; c < comp_count; ++c) {
                    if (comp_demand[c] == 0 && comp_nodes[c].empty()) continue;
                    if (part_demand > 0 && part_demand + comp_demand[c] > cap) flush();
                    std::sort(comp_nodes[c].begin(), comp_nodes[c].end());
                    part.tree = sorted_union(part.tree, comp_nodes[c]);
                    part.assigned.insert(part.assigned.end(), comp_assigned[c].begin(),
                                         comp_assigned[c].end());
                    part_demand += comp_demand[c];
                }
                flush();
            }
        } else {
            result.small.push_back(merged);
            result.next_x.push_back(v);
            result.next_d.push_back(group_demand);
            SplittableFlow::Demand suffix;
            suffix.source = v;
            suffix.amount = Rational(group_demand);
            for (int i : group) {
                const auto& path = F.routes[i].path;
                auto it = std::find(path.begin(), path.end(), v);
                FlowPath fp;
                fp.nodes.assign(it, path.end());
                fp.amount = F.routes[i].demand;
                suffix.paths.push_back(std::move(fp));
            }
            result.suffix_flow.demands.push_back(std::move(suffix));
        }
        for (int i : group) remaining.erase(i);
    }
    return result;
}

std::vector<Cluster> cluster_recursive(const std::vector<NodeId>& X,
                                       const std::vector<std::int64_t>& d,
                                       const UnsplittableFlow& F,
                                       const std::vector<Cluster>& trees, std::int64_t q,
                                       NodeId sink, AuditLedger* ledger) {
    std::vector<Cluster> out;
    std::vector<NodeId> cur_x = X;
    std::vector<std::int64_t> cur_d = d;
    UnsplittableFlow cur_f = F;
    std::vector<Cluster> cur_trees = trees;

    const std::int64_t max_calls = std::max<std::int64_t>(1, ceil_log2(q));
    std::int64_t calls = 0;
    while (!cur_x.empty()) {
        ++calls;
        if (calls > max_calls + 8)
            throw MalformedFlowError("cluster recursion exceeded its depth bound");
        auto step = cluster_step(cur_x, cur_d, cur_f, cur_trees, q, sink);
        for (auto& c : step.output) out.push_back(std::move(c));
        if (step.next_x.empty()) break;
        cur_f = dgg_unsplittable(step.suffix_flow, sink);
        cur_x = step.next_x;
        cur_d = step.next_d;
        cur_trees = step.small;
    }

    if (ledger) {
        ledger->check("cluster_recursive", 0, "recursion depth", std::to_string(calls),
                      "<= " + std::to_string(max_calls), calls <= max_calls);
        const std::int64_t cap = demand_cap(q);
        std::int64_t worst = 0;
        bool nonsink_ok = true;
        std::map<int, int> times_assigned;
        std::map<NodeId, int> membership;
        for (const auto& c : out) {
            worst = std::max(worst, c.demand());
            if (!c.contains(sink) && c.demand() < q) nonsink_ok = false;
            for (auto [sid, dem] : c.assigned) {
                (void)dem;
                times_assigned[sid]++;
            }
            for (NodeId v : c.tree)
                if (v != sink) membership[v]++;
        }
        bool unique_ok = true;
        for (auto [sid, cnt] : times_assigned)
            if (cnt != 1) unique_ok = false;
        std::int64_t max_member = 0;
        for (auto [v, cnt] : membership) max_member = std::max<std::int64_t>(max_member, cnt);
        ledger->check("cluster_recursive", 0, "max cluster demand", std::to_string(worst),
                      "<= " + std::to_string(cap), worst <= cap);
        ledger->check("cluster_recursive", 0, "non-sink clusters have demand >= q", "-",
                      ">= " + std::to_string(q), nonsink_ok);
        ledger->check("cluster_recursive", 0, "each source assigned exactly once", "-", "1",
                      unique_ok);
        ledger->check("cluster_recursive", 0, "max per-node membership",
                      std::to_string(max_member),
                      "<= " + std::to_string(std::max<std::int64_t>(1, ceil_log2(q))),
                      max_member <= std::max<std::int64_t>(1, ceil_log2(q)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// find_clusters: LLSC cover + de-duplication to unique assignment.
// ---------------------------------------------------------------------------
FindClustersResult find_clusters(const SsncInstance& inst, const LlscKnobs& knobs) {
    FindClustersResult result;
    LlscInstance llsc = build_llsc(inst);
    LlscCover cover = llsc_solve(llsc, knobs);
    result.clustering_cost = cover.total_cost;
    for (auto l : cover.load)
        result.max_node_tree_count = std::max(result.max_node_tree_count, l);

    // Assign each source wholly to the first chronological tree containing it.
    std::vector<Cluster> clusters;
    clusters.reserve(cover.trees.size());
    for (const auto& t : cover.trees) {
        Cluster c;
        c.tree = t.nodes;
        std::sort(c.tree.begin(), c.tree.end());
        c.root = t.root;
        clusters.push_back(std::move(c));
    }
    for (size_t si = 0; si < inst.sources.size(); ++si) {
        NodeId node = inst.sources[si].first;
        bool placed = false;
        for (size_t ci = 0; ci < clusters.size(); ++ci) {
            if (clusters[ci].contains(node)) {
                clusters[ci].assigned.push_back(
                    {static_cast<int>(si), inst.sources[si].second});
                placed = true;
                break;
            }
        }
        if (!placed)
            throw InfeasibleError("cover does not contain source " + std::to_string(node));
    }

    // Top up clusters that fell below q; merge when topping up is impossible.
    const std::int64_t q = inst.capacity;
    auto source_node = [&](int sid) { return inst.sources[sid].first; };
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t ci = 0; ci < clusters.size(); ++ci) {
            Cluster& k = clusters[ci];
            if (k.assigned.empty()) continue;
            if (k.contains(inst.sink) || k.demand() >= q) continue;
            // Overlapping cluster with the largest assigned demand.
            int best = -1;
            std::int64_t best_demand = -1;
            for (size_t cj = 0; cj < clusters.size(); ++cj) {
                if (cj == ci || clusters[cj].assigned.empty()) continue;
                bool overlap = false;
                for (NodeId v : k.tree)
                    if (clusters[cj].contains(v)) {
                        overlap = true;
                        break;
                    }
                if (overlap && clusters[cj].demand() > best_demand) {
                    best_demand = clusters[cj].demand();
                    best = static_cast<int>(cj);
                }
            }
            if (best < 0) {
                result.ledger.check("find_clusters", 0, "underfull cluster has an overlap", "0",
                                    ">= 1", false, "isolated underfull cluster kept");
                continue;
            }
            Cluster& e = clusters[best];
            // Move terminals of e that live on k's tree, largest demand first.
            std::vector<size_t> movable;
            for (size_t ai = 0; ai < e.assigned.size(); ++ai)
                if (k.contains(source_node(e.assigned[ai].first))) movable.push_back(ai);
            std::sort(movable.begin(), movable.end(), [&](size_t a, size_t b) {
                return e.assigned[a].second > e.assigned[b].second;
            });
            const bool e_exempt = e.contains(inst.sink);
            std::set<size_t> taken;
            for (size_t ai : movable) {
                if (k.demand() >= q) break;
                std::int64_t moved = e.assigned[ai].second;
                if (!e_exempt && e.demand() - moved < q) continue;
                k.assigned.push_back(e.assigned[ai]);
                taken.insert(ai);
            }
            if (!taken.empty()) {
                std::vector<std::pair<int, std::int64_t>> kept;
                for (size_t ai = 0; ai < e.assigned.size(); ++ai)
                    if (!taken.count(ai)) kept.push_back(e.assigned[ai]);
                e.assigned = std::move(kept);
                changed = true;
            }
            if (k.demand() < q) {
                // Merge k into e.
                e.tree = sorted_union(e.tree, k.tree);
                e.assigned.insert(e.assigned.end(), k.assigned.begin(), k.assigned.end());
                if (k.root && *k.root == inst.sink) e.root = inst.sink;
                k.assigned.clear();
                changed = true;
            }
            if (changed) break;
        }
    }

    for (auto& c : clusters)
        if (!c.assigned.empty()) result.clusters.push_back(std::move(c));

    bool coverage_ok = true, floor_ok = true;
    std::map<int, int> seen;
    for (const auto& c : result.clusters) {
        for (auto [sid, dem] : c.assigned) {
            (void)dem;
            seen[sid]++;
        }
        if (!c.contains(inst.sink) && c.demand() < q) floor_ok = false;
    }
    for (size_t si = 0; si < inst.sources.size(); ++si)
        if (seen[static_cast<int>(si)] != 1) coverage_ok = false;
    result.ledger.check("find_clusters", 0, "every terminal assigned exactly once", "-", "1",
                        coverage_ok);
    result.ledger.check("find_clusters", 0, "non-sink clusters have demand >= q", "-",
                        ">= " + std::to_string(q), floor_ok);
    result.ledger.check("find_clusters", 0, "clustering cost (logged)",
                        format_rational(result.clustering_cost), "-", true);
    result.ledger.check("find_clusters", 0, "max trees per node (logged)",
                        std::to_string(result.max_node_tree_count), "-", true);
    return result;
}

}  // namespace ncnd
