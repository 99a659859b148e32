#include "ncnd/ssnc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace ncnd {
namespace {

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

AggregationResult aggregate_at_roots(const std::vector<Cluster>& clusters,
                                     const SsncInstance& inst) {
    AggregationResult result;
    auto adj = inst.graph.adjacency();
    for (const auto& c : clusters) {
        NodeId root;
        if (c.contains(inst.sink))
            root = inst.sink;
        else if (c.root && c.contains(*c.root))
            root = *c.root;
        else
            root = c.tree.front();
        result.roots.push_back(root);

        // BFS spanning tree of the cluster's induced subgraph.
        std::map<NodeId, NodeId> parent;
        parent[root] = root;
        std::deque<NodeId> queue{root};
        while (!queue.empty()) {
            NodeId u = queue.front();
            queue.pop_front();
            for (auto [to, e] : adj[u]) {
                (void)e;
                if (!c.contains(to) || parent.count(to)) continue;
                parent[to] = u;
                queue.push_back(to);
            }
        }
        std::vector<std::vector<NodeId>> cluster_paths;
        for (auto [sid, dem] : c.assigned) {
            NodeId s = inst.sources[sid].first;
            if (!parent.count(s))
                throw MalformedFlowError("cluster tree is not connected to its root");
            std::vector<NodeId> path;
            for (NodeId at = s;; at = parent[at]) {
                path.push_back(at);
                if (at == root) break;
            }
            for (NodeId v : path) result.load[v] += dem;
            cluster_paths.push_back(std::move(path));
        }
        result.paths.push_back(std::move(cluster_paths));
    }
    return result;
}

std::vector<std::vector<NodeId>> route_roots_to_sink(
    const std::vector<std::pair<NodeId, std::int64_t>>& roots, const SsncInstance& inst,
    std::int64_t u) {
    if (roots.empty()) return {};
    DirectedNodeCapGraph dg = to_directed(inst.graph, inst.capacity, inst.sink);
    std::vector<NodeId> unit_sources;
    for (auto [r, d] : roots) {
        (void)d;
        unit_sources.push_back(r);
    }
    // Scale capacity overrides into flow units of q each.
    std::map<NodeId, std::int64_t> caps;
    for (auto [v, cap] : inst.capacity_override) {
        std::int64_t units = (cap + inst.capacity - 1) / inst.capacity;
        caps[v] = std::max<std::int64_t>(1, units) * u;
    }
    return min_cost_flow_node_cap(dg, unit_sources, inst.sink, u, caps.empty() ? nullptr : &caps);
}

UnsplittableFlow SsncSolution::as_flow(const SsncInstance& inst) const {
    UnsplittableFlow f;
    f.sink = inst.sink;
    for (const auto& r : routing) {
        std::vector<NodeId> walk = r.aggregation;
        for (size_t i = 1; i < r.trunk.size(); ++i) walk.push_back(r.trunk[i]);
        if (!r.trunk.empty() && walk.back() != r.trunk.back()) walk.push_back(r.trunk.back());
        UnsplittableFlow::Route route;
        route.source = inst.sources[r.source_idx].first;
        route.demand = Rational(inst.sources[r.source_idx].second);
        route.path = loop_erase(walk);
        f.routes.push_back(std::move(route));
    }
    return f;
}

SsncSolution solve_ssnc(const SsncInstance& inst, const SsncKnobs& knobs) {
    auto diag = validate_instance(inst);
    if (!diag.ok()) {
        std::string msg = "invalid instance:";
        for (const auto& s : diag.issues) msg += " [" + s + "]";
        throw InfeasibleError(msg);
    }
    {
        // Huge q would make the problem effectively uncapacitated; that
        // regime is out of scope.
        const double n = static_cast<double>(std::max(2, inst.graph.node_count()));
        if (static_cast<double>(inst.capacity) > n * n * n * n)
            throw std::invalid_argument("capacity exceeds n^4; uncapacitated regime unsupported");
    }

    SsncSolution sol;
    if (inst.sources.empty()) {
        sol.cost = 0;
        sol.congestion = 0;
        return sol;
    }

    auto fc = find_clusters(inst, knobs.llsc);
    sol.ledger.append(fc.ledger);
    auto agg = aggregate_at_roots(fc.clusters, inst);

    // Non-sink clusters route their roots to the sink via min-cost flow.
    std::vector<std::pair<NodeId, std::int64_t>> trunk_roots;
    std::vector<int> trunk_cluster;  // cluster index per trunk root
    for (size_t ci = 0; ci < fc.clusters.size(); ++ci) {
        if (agg.roots[ci] == inst.sink) continue;
        trunk_roots.push_back({agg.roots[ci], fc.clusters[ci].demand()});
        trunk_cluster.push_back(static_cast<int>(ci));
    }

    const int n = inst.graph.node_count();
    std::int64_t u = knobs.u_multiplier;
    if (u <= 0) {
        double lq = std::log(static_cast<double>(std::max<std::int64_t>(2, inst.capacity)));
        double ln = std::log(static_cast<double>(std::max(2, n)));
        u = static_cast<std::int64_t>(std::ceil(lq * ln * ln)) + 1;
    }
    std::vector<std::vector<NodeId>> trunks;
    int doublings = 0;
    while (true) {
        try {
            trunks = route_roots_to_sink(trunk_roots, inst, u);
            break;
        } catch (const InfeasibleError&) {
            if (doublings >= knobs.max_u_doublings) throw;
            ++doublings;
            u *= 2;
            sol.ledger.check("ssnc", 0, "u escalation", std::to_string(u), "-", true,
                             "routing infeasible at the previous u; doubled");
        }
    }
    sol.u_used = u;

    // Compose per-source routes and loads.
    std::map<int, std::pair<int, int>> source_pos;  // source idx -> (cluster, slot)
    for (size_t ci = 0; ci < fc.clusters.size(); ++ci)
        for (size_t ai = 0; ai < fc.clusters[ci].assigned.size(); ++ai)
            source_pos[fc.clusters[ci].assigned[ai].first] = {static_cast<int>(ci),
                                                              static_cast<int>(ai)};
    std::map<int, std::vector<NodeId>> trunk_of_cluster;
    for (size_t ti = 0; ti < trunks.size(); ++ti)
        trunk_of_cluster[trunk_cluster[ti]] = trunks[ti];

    std::set<NodeId> used;
    for (const auto& c : fc.clusters)
        for (NodeId v : c.tree) used.insert(v);
    for (const auto& t : trunks)
        for (NodeId v : t) used.insert(v);

    for (size_t si = 0; si < inst.sources.size(); ++si) {
        auto [ci, ai] = source_pos.at(static_cast<int>(si));
        SsncSolution::SourceRoute route;
        route.source_idx = static_cast<int>(si);
        route.aggregation = agg.paths[ci][ai];
        auto it = trunk_of_cluster.find(ci);
        if (it != trunk_of_cluster.end()) route.trunk = it->second;
        sol.routing.push_back(std::move(route));
    }

    // Loads from the concatenated per-source walks: aggregation into the
    // cluster root continues along the trunk, so the root is charged once.
    for (const auto& r : sol.routing) {
        std::int64_t dem = inst.sources[r.source_idx].second;
        for (NodeId v : r.aggregation) sol.load[v] += dem;
        for (size_t i = 1; i < r.trunk.size(); ++i) sol.load[r.trunk[i]] += dem;
    }

    sol.nodes.assign(used.begin(), used.end());
    sol.cost = 0;
    for (NodeId v : sol.nodes)
        if (v != inst.sink) sol.cost += inst.graph.node_cost[v];

    sol.congestion = 0;
    Rational override_congestion = 0;
    for (const auto& [v, load] : sol.load) {
        if (v == inst.sink) continue;
        auto ov = inst.capacity_override.find(v);
        if (ov != inst.capacity_override.end()) {
            if (ov->second > 0)
                override_congestion =
                    std::max(override_congestion, Rational(load) / Rational(ov->second));
            continue;
        }
        sol.congestion = std::max(sol.congestion, Rational(load) / Rational(inst.capacity));
    }

    // Exact feasibility audit: recompute loads from the recorded routing.
    {
        std::map<NodeId, std::int64_t> check;
        for (const auto& r : sol.routing) {
            std::vector<NodeId> walk = r.aggregation;
            for (size_t i = 1; i < r.trunk.size(); ++i) walk.push_back(r.trunk[i]);
            std::int64_t dem = inst.sources[r.source_idx].second;
            for (NodeId v : walk) check[v] += dem;
        }
        bool ok = check == sol.load;
        bool routed = true;
        for (const auto& r : sol.routing) {
            NodeId s = inst.sources[r.source_idx].first;
            if (r.aggregation.empty() || r.aggregation.front() != s) routed = false;
            NodeId end = r.trunk.empty() ? r.aggregation.back() : r.trunk.back();
            if (end != inst.sink) routed = false;
        }
        sol.ledger.check("ssnc", 0, "loads match the recorded routing", "-", "exact", ok);
        sol.ledger.check("ssnc", 0, "every source routed to the sink", "-", "exact", routed);
    }
    {
        std::int64_t max_member = 0;
        std::map<NodeId, std::int64_t> member;
        for (const auto& c : fc.clusters)
            for (NodeId v : c.tree)
                if (v != inst.sink) max_member = std::max(max_member, ++member[v]);
        std::int64_t lq = 1;
        while ((std::int64_t(1) << lq) < inst.capacity) ++lq;
        Rational bound = Rational(inst.capacity) * Rational(1 + lq) * Rational(u) *
                         Rational(std::max<std::int64_t>(1, max_member));
        std::int64_t max_load = 0;
        for (const auto& [v, load] : sol.load)
            if (v != inst.sink && !inst.capacity_override.count(v))
                max_load = std::max(max_load, load);
        sol.ledger.check("ssnc", 0, "congestion composition bound", std::to_string(max_load),
                         "<= " + format_rational(bound), Rational(max_load) <= bound);
    }
    sol.ledger.check("ssnc", 0, "fake-node congestion (logged)",
                     format_rational(override_congestion), "-", true);
    return sol;
}

}  // namespace ncnd
