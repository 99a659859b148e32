#include "ncnd/flow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

namespace ncnd {

std::map<NodeId, Rational> SplittableFlow::node_loads() const {
    std::map<NodeId, Rational> load;
    for (const auto& d : demands)
        for (const auto& p : d.paths) {
            std::set<NodeId> seen(p.nodes.begin(), p.nodes.end());
            for (NodeId v : seen) load[v] += p.amount;
        }
    return load;
}

Rational SplittableFlow::max_demand() const {
    Rational m = 0;
    for (const auto& d : demands) m = std::max(m, d.amount);
    return m;
}

void SplittableFlow::validate() const {
    for (const auto& d : demands) {
        if (d.amount <= 0) throw MalformedFlowError("demand amount must be positive");
        Rational total = 0;
        for (const auto& p : d.paths) {
            if (p.amount <= 0) throw MalformedFlowError("path amount must be positive");
            if (p.nodes.empty() || p.nodes.front() != d.source || p.nodes.back() != sink)
                throw MalformedFlowError("path endpoints do not match demand");
            total += p.amount;
        }
        if (total != d.amount)
            throw MalformedFlowError("path amounts do not sum to the demand");
    }
}

std::map<NodeId, Rational> UnsplittableFlow::node_loads() const {
    std::map<NodeId, Rational> load;
    for (const auto& r : routes) {
        std::set<NodeId> seen(r.path.begin(), r.path.end());
        for (NodeId v : seen) load[v] += r.demand;
    }
    return load;
}

SplittableFlow UnsplittableFlow::as_splittable() const {
    SplittableFlow f;
    f.sink = sink;
    for (const auto& r : routes)
        f.demands.push_back({r.source, r.demand, {FlowPath{r.path, r.demand}}});
    return f;
}

namespace {

// ---------------------------------------------------------------------------
// Integral max flow (Dinic) on an ArcGraph. Adjacency is kept in arc
// insertion order after a stable sort by head id, so augmentations are
// deterministic with ties broken toward smaller node ids.
// ---------------------------------------------------------------------------
struct Dinic {
    struct Edge {
        NodeId to;
        std::int64_t cap;
        int rev;
        int arc_index;  // -1 for reverse edges
    };
    int n;
    std::vector<std::vector<Edge>> adj;
    std::vector<int> level, iter;

    explicit Dinic(int n) : n(n), adj(n) {}

    void add_arc(NodeId u, NodeId v, std::int64_t cap, int arc_index) {
        adj[u].push_back({v, cap, static_cast<int>(adj[v].size()), arc_index});
        adj[v].push_back({u, 0, static_cast<int>(adj[u].size()) - 1, -1});
    }

    void sort_adjacency() {
        // Stable re-link: sort each list by (to, insertion order) and fix rev.
        for (int u = 0; u < n; ++u) {
            std::vector<int> order(adj[u].size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return adj[u][a].to < adj[u][b].to; });
            std::vector<Edge> next;
            std::vector<int> pos(adj[u].size());
            for (size_t i = 0; i < order.size(); ++i) {
                pos[order[i]] = static_cast<int>(i);
                next.push_back(adj[u][order[i]]);
            }
            for (size_t i = 0; i < next.size(); ++i) {
                Edge& e = next[i];
                adj[e.to][e.rev].rev = static_cast<int>(i);
            }
            adj[u] = std::move(next);
        }
    }

    bool bfs(NodeId s, NodeId t) {
        level.assign(n, -1);
        std::deque<NodeId> q{s};
        level[s] = 0;
        while (!q.empty()) {
            NodeId u = q.front();
            q.pop_front();
            for (const Edge& e : adj[u])
                if (e.cap > 0 && level[e.to] < 0) {
                    level[e.to] = level[u] + 1;
                    q.push_back(e.to);
                }
        }
        return level[t] >= 0;
    }

    std::int64_t dfs(NodeId u, NodeId t, std::int64_t f) {
        if (u == t) return f;
        for (int& i = iter[u]; i < static_cast<int>(adj[u].size()); ++i) {
            Edge& e = adj[u][i];
            if (e.cap > 0 && level[e.to] == level[u] + 1) {
                std::int64_t d = dfs(e.to, t, std::min(f, e.cap));
                if (d > 0) {
                    e.cap -= d;
                    adj[e.to][e.rev].cap += d;
                    return d;
                }
            }
        }
        return 0;
    }

    std::int64_t run(NodeId s, NodeId t) {
        sort_adjacency();
        std::int64_t total = 0;
        while (bfs(s, t)) {
            iter.assign(n, 0);
            while (std::int64_t f = dfs(s, t, kUnboundedCap)) total += f;
        }
        return total;
    }

    /// Flow pushed through each original arc (post-run).
    std::vector<std::int64_t> arc_flows(const ArcGraph& g) const {
        std::vector<std::int64_t> flow(g.arcs.size(), 0);
        for (int u = 0; u < n; ++u)
            for (const Edge& e : adj[u])
                if (e.arc_index >= 0) flow[e.arc_index] = g.arcs[e.arc_index].cap - e.cap;
        return flow;
    }
};

// Widest-path peeling of a nonnegative arc flow into source->sink paths.
// Returns (path over graph node ids, amount) pairs; deterministic.
struct ArcFlowView {
    int node_count;
    // adjacency: node -> list of (to, flow index); flows mutable
    std::vector<std::vector<std::pair<NodeId, int>>> out;
    std::vector<Rational> flow;
    std::vector<std::pair<NodeId, NodeId>> ends;

    explicit ArcFlowView(int n) : node_count(n), out(n) {}
    int add(NodeId u, NodeId v, Rational f) {
        int idx = static_cast<int>(flow.size());
        flow.push_back(std::move(f));
        ends.push_back({u, v});
        out[u].push_back({v, idx});
        return idx;
    }
    void sort_adjacency() {
        for (auto& lst : out) std::sort(lst.begin(), lst.end());
    }

    // Widest path source->sink among positive-flow arcs; empty if none.
    std::vector<int> widest_path(NodeId s, NodeId t) const {
        std::vector<Rational> width(node_count, Rational(-1));
        std::vector<int> parent_arc(node_count, -1);
        std::vector<char> done(node_count, 0);
        width[s] = Rational(kUnboundedCap) * Rational(kUnboundedCap);
        while (true) {
            int best = -1;
            for (int v = 0; v < node_count; ++v)
                if (!done[v] && width[v] > 0 && (best < 0 || width[v] > width[best])) best = v;
            if (best < 0) break;
            done[best] = 1;
            if (best == t) break;
            for (auto [w, idx] : out[best]) {
                if (flow[idx] <= 0) continue;
                Rational cand = std::min(width[best], flow[idx]);
                if (cand > width[w]) {
                    width[w] = cand;
                    parent_arc[w] = idx;
                }
            }
        }
        std::vector<int> arcs;
        if (width[t] <= 0) return arcs;
        NodeId cur = t;
        while (cur != s) {
            int a = parent_arc[cur];
            arcs.push_back(a);
            cur = ends[a].first;
        }
        std::reverse(arcs.begin(), arcs.end());
        return arcs;
    }

    // Peels up to `limit` units from s to t; returns the peeled paths.
    std::vector<FlowPath> peel(NodeId s, NodeId t, Rational limit) {
        std::vector<FlowPath> out_paths;
        Rational remaining = limit;
        while (remaining > 0) {
            auto arcs = widest_path(s, t);
            if (arcs.empty())
                throw MalformedFlowError("flow decomposition ran out of paths before demand met");
            Rational amt = remaining;
            for (int a : arcs) amt = std::min(amt, flow[a]);
            FlowPath p;
            p.amount = amt;
            p.nodes.push_back(s);
            for (int a : arcs) {
                flow[a] -= amt;
                p.nodes.push_back(ends[a].second);
            }
            out_paths.push_back(std::move(p));
            remaining -= amt;
        }
        return out_paths;
    }
};

std::vector<NodeId> split_path_to_original(const std::vector<NodeId>& split_nodes,
                                           const SplitMap& map) {
    // A split-graph path alternates v_in, v_out; every traversed capacity arc
    // contributes one original node.
    std::vector<NodeId> out;
    for (size_t i = 0; i + 1 < split_nodes.size(); ++i) {
        if (map.is_in(split_nodes[i]) && split_nodes[i + 1] == split_nodes[i] + 1)
            out.push_back(map.original(split_nodes[i]));
    }
    if (!split_nodes.empty() && !map.is_in(split_nodes.back())) {
        NodeId last = map.original(split_nodes.back());
        if (out.empty() || out.back() != last) out.push_back(last);
    }
    return out;
}

}  // namespace

MaxFlowResult max_flow_node_cap(const DirectedNodeCapGraph& g, NodeId source, NodeId sink) {
    auto [arcg, map] = split_transform(g);
    Dinic dinic(arcg.node_count);
    for (size_t i = 0; i < arcg.arcs.size(); ++i)
        dinic.add_arc(arcg.arcs[i].from, arcg.arcs[i].to, arcg.arcs[i].cap, static_cast<int>(i));
    // Flow starts at the source's in-node so the source's own capacity binds;
    // it ends at the sink's in-node so the sink's capacity never does.
    std::int64_t value = dinic.run(map.in(source), map.in(sink));

    MaxFlowResult result;
    result.value = value;
    result.flow.sink = sink;
    if (value == 0) return result;

    auto flows = dinic.arc_flows(arcg);
    ArcFlowView view(arcg.node_count);
    for (size_t i = 0; i < arcg.arcs.size(); ++i)
        if (flows[i] > 0) view.add(arcg.arcs[i].from, arcg.arcs[i].to, Rational(flows[i]));
    view.sort_adjacency();
    auto paths = view.peel(map.in(source), map.in(sink), Rational(value));

    SplittableFlow::Demand demand;
    demand.source = source;
    demand.amount = Rational(value);
    for (auto& p : paths) {
        FlowPath fp;
        fp.amount = p.amount;
        fp.nodes = split_path_to_original(p.nodes, map);
        // Re-attach the endpoints (source out-node and sink in-node collapse).
        if (fp.nodes.empty() || fp.nodes.front() != source)
            fp.nodes.insert(fp.nodes.begin(), source);
        if (fp.nodes.back() != sink) fp.nodes.push_back(sink);
        demand.paths.push_back(std::move(fp));
    }
    result.flow.demands.push_back(std::move(demand));
    return result;
}

// ---------------------------------------------------------------------------
// Min-cost flow: successive shortest paths with exact rational potentials.
// ---------------------------------------------------------------------------
namespace {

struct McfEdge {
    NodeId to;
    std::int64_t cap;
    Rational cost;
    int rev;
};

struct MinCostNet {
    int n;
    std::vector<std::vector<McfEdge>> adj;
    explicit MinCostNet(int n) : n(n), adj(n) {}
    void add(NodeId u, NodeId v, std::int64_t cap, Rational cost) {
        adj[u].push_back({v, cap, cost, static_cast<int>(adj[v].size())});
        adj[v].push_back({u, 0, -cost, static_cast<int>(adj[u].size()) - 1});
    }
};

}  // namespace

std::vector<std::vector<NodeId>> min_cost_flow_node_cap(
    const DirectedNodeCapGraph& g, const std::vector<NodeId>& unit_sources, NodeId sink,
    std::int64_t per_node_cap, const std::map<NodeId, std::int64_t>* cap_override) {
    if (unit_sources.empty()) return {};
    if (per_node_cap <= 0) throw InfeasibleError("per-node capacity is zero");

    DirectedNodeCapGraph capped = g;
    for (NodeId v = 0; v < g.node_count; ++v) {
        std::int64_t cap = per_node_cap;
        if (cap_override) {
            auto it = cap_override->find(v);
            if (it != cap_override->end()) cap = it->second;
        }
        capped.node_capacity[v] = (v == sink) ? kUnboundedCap : cap;
    }
    auto [arcg, map] = split_transform(capped);

    const NodeId super = arcg.node_count;  // super-source
    MinCostNet net(arcg.node_count + 1);
    for (const auto& a : arcg.arcs) net.add(a.from, a.to, a.cap, a.cost);
    std::map<NodeId, std::int64_t> multiplicity;
    for (NodeId s : unit_sources) multiplicity[s]++;
    for (auto [s, m] : multiplicity) net.add(super, map.in(s), m, Rational(0));

    const NodeId target = map.in(sink);
    const int n = net.n;
    std::vector<Rational> potential(n, Rational(0));
    std::vector<std::vector<NodeId>> unit_paths;

    const std::int64_t total_units = static_cast<std::int64_t>(unit_sources.size());
    for (std::int64_t unit = 0; unit < total_units; ++unit) {
        // Dijkstra with reduced costs; deterministic O(n^2) selection, ties
        // toward the smaller node id.
        std::vector<Rational> dist(n, Rational(0));
        std::vector<char> reached(n, 0), done(n, 0);
        std::vector<std::pair<NodeId, int>> parent(n, {-1, -1});
        dist[super] = 0;
        reached[super] = 1;
        while (true) {
            int best = -1;
            for (int v = 0; v < n; ++v)
                if (reached[v] && !done[v] && (best < 0 || dist[v] < dist[best])) best = v;
            if (best < 0) break;
            done[best] = 1;
            for (int ei = 0; ei < static_cast<int>(net.adj[best].size()); ++ei) {
                const McfEdge& e = net.adj[best][ei];
                if (e.cap <= 0) continue;
                Rational nd = dist[best] + e.cost + potential[best] - potential[e.to];
                if (!reached[e.to] || nd < dist[e.to]) {
                    reached[e.to] = 1;
                    dist[e.to] = nd;
                    parent[e.to] = {best, ei};
                }
            }
        }
        if (!reached[target])
            throw InfeasibleError("no fractional routing exists under the node capacity");
        for (int v = 0; v < n; ++v)
            if (reached[v]) potential[v] += dist[v];

        std::vector<NodeId> split_nodes;
        NodeId cur = target;
        while (cur != super) {
            split_nodes.push_back(cur);
            auto [pu, pe] = parent[cur];
            McfEdge& e = net.adj[pu][pe];
            e.cap -= 1;
            net.adj[e.to][e.rev].cap += 1;
            cur = pu;
        }
        std::reverse(split_nodes.begin(), split_nodes.end());
        std::vector<NodeId> orig = split_path_to_original(split_nodes, map);
        if (orig.empty() || orig.back() != sink) orig.push_back(sink);
        unit_paths.push_back(std::move(orig));
    }

    // Hand paths back in the order of unit_sources: each path starts at some
    // requested source node.
    std::map<NodeId, std::vector<std::vector<NodeId>>> by_source;
    for (auto& p : unit_paths) by_source[p.front()].push_back(std::move(p));
    std::vector<std::vector<NodeId>> out;
    for (NodeId s : unit_sources) {
        auto& bucket = by_source[s];
        if (bucket.empty()) throw NcndError("internal: unit path accounting mismatch");
        out.push_back(std::move(bucket.back()));
        bucket.pop_back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splittable -> unsplittable, single sink. Greedy budgeted widest-path with
// an exhaustive fallback; the load bound load'(v) <= F_v + max demand holds
// by construction and is re-checked before returning.
// ---------------------------------------------------------------------------
namespace {

struct DggState {
    NodeId sink;
    std::map<NodeId, Rational> budget;       // F_v + d_max
    std::map<NodeId, Rational> consumed;
    std::map<std::pair<NodeId, NodeId>, Rational> residual;         // guidance
    std::map<NodeId, std::vector<NodeId>> support_out;              // fixed support
    std::set<std::pair<NodeId, NodeId>> support_arcs;

    bool admissible(NodeId v, const Rational& d) const {
        auto itb = budget.find(v);
        if (itb == budget.end()) return false;
        auto itc = consumed.find(v);
        Rational used = itc == consumed.end() ? Rational(0) : itc->second;
        return used + d <= itb->second;
    }

    // Widest admissible path w.r.t. the residual guidance flow.
    std::vector<NodeId> find_path(NodeId s, const Rational& d) const {
        if (!admissible(s, d)) return {};
        std::map<NodeId, Rational> width;
        std::map<NodeId, NodeId> parent;
        std::set<NodeId> done;
        width[s] = Rational(kUnboundedCap) * Rational(kUnboundedCap);
        while (true) {
            NodeId best = -1;
            Rational bw = -1;
            for (const auto& [v, w] : width)
                if (!done.count(v) && w > bw) {
                    bw = w;
                    best = v;
                }
            if (best == -1) break;
            done.insert(best);
            if (best == sink) break;
            auto it = support_out.find(best);
            if (it == support_out.end()) continue;
            for (NodeId to : it->second) {
                auto rit = residual.find({best, to});
                if (rit == residual.end() || rit->second <= 0) continue;
                if (!admissible(to, d)) continue;
                Rational cand = std::min(bw, rit->second);
                auto wit = width.find(to);
                if (wit == width.end() || cand > wit->second) {
                    width[to] = cand;
                    parent[to] = best;
                }
            }
        }
        if (!width.count(sink) || done.find(sink) == done.end()) return {};
        std::vector<NodeId> path;
        NodeId cur = sink;
        while (cur != s) {
            path.push_back(cur);
            cur = parent.at(cur);
        }
        path.push_back(s);
        std::reverse(path.begin(), path.end());
        return path;
    }

    void commit(const std::vector<NodeId>& path, const Rational& d) {
        for (NodeId v : path) consumed[v] += d;
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            auto& r = residual[{path[i], path[i + 1]}];
            r = std::max(Rational(0), r - d);
        }
    }

    void uncommit(const std::vector<NodeId>& path, const Rational& d) {
        for (NodeId v : path) consumed[v] -= d;
        // Residual guidance is not restored; the fallback ignores it.
    }
};

// Depth-first assignment over all support paths; prunes on budgets.
bool dgg_backtrack(DggState& st, const std::vector<std::pair<int, const SplittableFlow::Demand*>>& order,
                   size_t idx, std::vector<std::vector<NodeId>>& chosen, long long& steps) {
    if (idx == order.size()) return true;
    const auto& dem = *order[idx].second;
    std::vector<NodeId> path{dem.source};
    std::set<NodeId> on_path{dem.source};
    if (!st.admissible(dem.source, dem.amount)) return false;

    // Iterative DFS over simple support paths, lexicographic by neighbor id.
    struct Frame {
        NodeId node;
        size_t next = 0;
    };
    std::vector<Frame> stack{{dem.source, 0}};
    while (!stack.empty()) {
        if (++steps > 2000000)
            throw NcndError("unsplittable conversion fallback exceeded its search budget");
        Frame& fr = stack.back();
        if (fr.node == st.sink) {
            st.commit(path, dem.amount);
            chosen.push_back(path);
            if (dgg_backtrack(st, order, idx + 1, chosen, steps)) return true;
            chosen.pop_back();
            st.uncommit(path, dem.amount);
            // fall through: continue exploring siblings of the sink frame
            stack.pop_back();
            on_path.erase(fr.node);
            path.pop_back();
            continue;
        }
        auto it = st.support_out.find(fr.node);
        const std::vector<NodeId>* outs = it == st.support_out.end() ? nullptr : &it->second;
        bool advanced = false;
        while (outs && fr.next < outs->size()) {
            NodeId to = (*outs)[fr.next++];
            if (on_path.count(to)) continue;
            if (!st.admissible(to, dem.amount)) continue;
            path.push_back(to);
            on_path.insert(to);
            stack.push_back({to, 0});
            advanced = true;
            break;
        }
        if (!advanced) {
            stack.pop_back();
            on_path.erase(fr.node);
            path.pop_back();
        }
    }
    return false;
}

}  // namespace

UnsplittableFlow dgg_unsplittable(const SplittableFlow& f, NodeId sink) {
    if (f.sink != sink) throw MalformedFlowError("flow sink mismatch");
    f.validate();

    UnsplittableFlow out;
    out.sink = sink;
    out.routes.resize(f.demands.size());

    DggState st;
    st.sink = sink;
    Rational d_max = f.max_demand();
    auto loads = f.node_loads();
    for (const auto& [v, load] : loads) st.budget[v] = load + d_max;
    st.budget[sink] = Rational(kUnboundedCap) * Rational(kUnboundedCap);
    for (const auto& d : f.demands)
        for (const auto& p : d.paths)
            for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
                st.residual[{p.nodes[i], p.nodes[i + 1]}] += p.amount;
                if (st.support_arcs.insert({p.nodes[i], p.nodes[i + 1]}).second)
                    st.support_out[p.nodes[i]].push_back(p.nodes[i + 1]);
            }
    for (auto& [v, outs] : st.support_out) std::sort(outs.begin(), outs.end());

    // Demands that already use a single path keep it (their own contribution
    // to each load pays for it); the rest go largest-demand-first.
    std::vector<std::pair<int, const SplittableFlow::Demand*>> rest;
    for (size_t i = 0; i < f.demands.size(); ++i) {
        const auto& d = f.demands[i];
        if (d.paths.size() == 1) {
            out.routes[i] = {d.source, d.amount, d.paths[0].nodes};
            st.commit(d.paths[0].nodes, d.amount);
        } else {
            rest.push_back({static_cast<int>(i), &d});
        }
    }
    std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) {
        return a.second->amount > b.second->amount;
    });

    std::vector<std::pair<int, std::vector<NodeId>>> greedy_done;
    bool greedy_ok = true;
    for (const auto& [idx, dem] : rest) {
        auto path = st.find_path(dem->source, dem->amount);
        if (path.empty()) {
            greedy_ok = false;
            break;
        }
        st.commit(path, dem->amount);
        greedy_done.push_back({idx, std::move(path)});
    }

    if (greedy_ok) {
        for (auto& [idx, path] : greedy_done)
            out.routes[idx] = {f.demands[idx].source, f.demands[idx].amount, std::move(path)};
    } else {
        // Roll back the greedy partial assignment and search exhaustively.
        for (auto& [idx, path] : greedy_done) st.uncommit(path, f.demands[idx].amount);
        std::vector<std::vector<NodeId>> chosen;
        long long steps = 0;
        if (!dgg_backtrack(st, rest, 0, chosen, steps))
            throw NcndError("internal: no unsplittable assignment meets the load bound");
        for (size_t i = 0; i < rest.size(); ++i)
            out.routes[rest[i].first] = {rest[i].second->source, rest[i].second->amount,
                                         chosen[i]};
    }

    // Contract re-check: support containment and the additive load bound.
    auto new_loads = out.node_loads();
    for (const auto& [v, load] : new_loads) {
        Rational base = loads.count(v) ? loads[v] : Rational(0);
        if (v != sink && load > base + d_max)
            throw NcndError("internal: unsplittable load bound violated");
    }
    for (const auto& r : out.routes)
        for (size_t i = 0; i + 1 < r.path.size(); ++i)
            if (!st.support_arcs.count({r.path[i], r.path[i + 1]}))
                throw NcndError("internal: unsplittable path left the splittable support");
    return out;
}

SplittableFlow decompose_arc_flow(
    const std::map<std::pair<NodeId, NodeId>, Rational>& arc_flow,
    const std::vector<std::pair<NodeId, Rational>>& source_demands, NodeId sink) {
    NodeId max_node = sink;
    for (const auto& [arc, f] : arc_flow) {
        (void)f;
        max_node = std::max({max_node, arc.first, arc.second});
    }
    for (const auto& [s, d] : source_demands) {
        (void)d;
        max_node = std::max(max_node, s);
    }
    ArcFlowView view(max_node + 1);
    for (const auto& [arc, f] : arc_flow)
        if (f > 0) view.add(arc.first, arc.second, f);
    view.sort_adjacency();

    SplittableFlow out;
    out.sink = sink;
    for (const auto& [s, d] : source_demands) {
        SplittableFlow::Demand dem;
        dem.source = s;
        dem.amount = d;
        dem.paths = view.peel(s, sink, d);
        out.demands.push_back(std::move(dem));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Approximate max concurrent flow (shortest-path reweighting).
// ---------------------------------------------------------------------------
namespace {

struct ShortestPathResult {
    std::vector<int> arcs;
    double length;
};

ShortestPathResult resource_shortest_path(const ResourceGraph& g,
                                          const std::vector<std::vector<std::pair<int, int>>>& out,
                                          const std::vector<double>& arc_len, NodeId s, NodeId t) {
    const int n = g.node_count;
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n, -1);
    std::set<std::pair<double, NodeId>> heap;
    dist[s] = 0;
    heap.insert({0.0, s});
    while (!heap.empty()) {
        auto [d, u] = *heap.begin();
        heap.erase(heap.begin());
        if (u == t) break;
        for (auto [to, ai] : out[u]) {
            if (arc_len[ai] == std::numeric_limits<double>::infinity()) continue;
            double nd = d + arc_len[ai];
            if (nd < dist[to]) {
                heap.erase({dist[to], to});
                dist[to] = nd;
                parent[to] = ai;
                heap.insert({nd, to});
            }
        }
    }
    ShortestPathResult res;
    res.length = dist[t];
    if (!std::isfinite(dist[t])) return res;
    NodeId cur = t;
    while (cur != s) {
        res.arcs.push_back(parent[cur]);
        cur = g.arcs[parent[cur]].from;
    }
    std::reverse(res.arcs.begin(), res.arcs.end());
    return res;
}

}  // namespace

std::vector<double> ConcurrentFlowResult::resource_loads(const ResourceGraph& g) const {
    std::vector<double> load(g.resource_cap.size(), 0.0);
    for (const auto& demand_paths : per_demand)
        for (const auto& pf : demand_paths)
            for (int ai : pf.arcs)
                for (auto [r, rate] : g.arcs[ai].usage) load[r] += pf.amount * rate;
    return load;
}

ConcurrentFlowResult concurrent_mcf(const ResourceGraph& g, const std::vector<McfDemand>& demands,
                                    double eps) {
    if (eps <= 0 || eps > 0.5) throw std::invalid_argument("eps must lie in (0, 1/2]");
    for (const auto& d : demands)
        if (d.amount <= 0) throw std::invalid_argument("demand amounts must be positive");

    ConcurrentFlowResult result;
    result.per_demand.resize(demands.size());
    if (demands.empty()) {
        result.throughput = 0.0;
        return result;
    }

    // Arcs whose every resource has positive capacity are usable.
    std::vector<std::vector<std::pair<int, int>>> out(g.node_count);
    std::vector<char> usable(g.arcs.size(), 1);
    for (size_t i = 0; i < g.arcs.size(); ++i) {
        for (auto [r, rate] : g.arcs[i].usage)
            if (g.resource_cap[r] <= 0 || rate <= 0) usable[i] = 0;
        if (usable[i]) out[g.arcs[i].from].push_back({g.arcs[i].to, static_cast<int>(i)});
    }
    for (auto& lst : out) std::sort(lst.begin(), lst.end());

    // Connectivity check.
    for (const auto& d : demands) {
        std::vector<char> seen(g.node_count, 0);
        std::deque<NodeId> q{d.source};
        if (d.source >= 0 && d.source < g.node_count) seen[d.source] = 1;
        while (!q.empty()) {
            NodeId u = q.front();
            q.pop_front();
            for (auto [to, ai] : out[u]) {
                (void)ai;
                if (!seen[to]) {
                    seen[to] = 1;
                    q.push_back(to);
                }
            }
        }
        if (d.sink < 0 || d.sink >= g.node_count || !seen[d.sink]) {
            result.throughput = 0.0;
            return result;
        }
    }

    const double ep = eps / 4.0;
    const int m = static_cast<int>(g.resource_cap.size());
    const double delta = std::pow((1.0 + ep) * std::max(1, m), -1.0 / ep) * (1.0 + ep);

    std::vector<double> len(m);
    double sum_cl = 0.0;  // sum over resources of cap * length
    for (int r = 0; r < m; ++r) {
        len[r] = g.resource_cap[r] > 0 ? delta / g.resource_cap[r] : 0.0;
        sum_cl += g.resource_cap[r] > 0 ? delta : 0.0;
    }
    std::vector<double> arc_len(g.arcs.size());
    auto refresh_arc = [&](int ai) {
        double l = 0;
        for (auto [r, rate] : g.arcs[ai].usage) l += rate * len[r];
        arc_len[ai] = usable[ai] ? l : std::numeric_limits<double>::infinity();
    };
    for (size_t i = 0; i < g.arcs.size(); ++i) refresh_arc(static_cast<int>(i));

    std::vector<std::map<std::vector<int>, double>> raw(demands.size());  // keyed by arc list
    std::vector<double> routed(demands.size(), 0.0);
    std::vector<double> resource_load(m, 0.0);

    long long safety = 0;
    while (sum_cl < 1.0) {
        for (size_t j = 0; j < demands.size() && sum_cl < 1.0; ++j) {
            double rem = demands[j].amount;
            while (rem > 0 && sum_cl < 1.0) {
                if (++safety > 4000000) {
                    sum_cl = 1.0;  // terminate; primal scaling below stays valid
                    break;
                }
                auto sp = resource_shortest_path(g, out, arc_len, demands[j].source,
                                                 demands[j].sink);
                if (sp.arcs.empty()) throw NcndError("internal: lost connectivity mid-solve");
                double cap = std::numeric_limits<double>::infinity();
                for (int ai : sp.arcs)
                    for (auto [r, rate] : g.arcs[ai].usage)
                        cap = std::min(cap, g.resource_cap[r] / rate);
                double u = std::min(rem, cap);
                raw[j][sp.arcs] += u;
                routed[j] += u;
                for (int ai : sp.arcs)
                    for (auto [r, rate] : g.arcs[ai].usage) {
                        double used = u * rate;
                        resource_load[r] += used;
                        sum_cl -= g.resource_cap[r] * len[r];
                        len[r] *= (1.0 + ep * used / g.resource_cap[r]);
                        sum_cl += g.resource_cap[r] * len[r];
                    }
                for (int ai : sp.arcs) refresh_arc(ai);
                // Arcs sharing a touched resource also need refreshing.
                for (size_t i = 0; i < g.arcs.size(); ++i) refresh_arc(static_cast<int>(i));
                rem -= u;
            }
        }
    }

    double congestion = 0.0;
    for (int r = 0; r < m; ++r)
        if (g.resource_cap[r] > 0) congestion = std::max(congestion, resource_load[r] / g.resource_cap[r]);
    if (congestion <= 0) {
        result.throughput = 0.0;
        return result;
    }
    const double scale = (1.0 - 1e-12) / congestion;
    double lambda = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < demands.size(); ++j)
        lambda = std::min(lambda, routed[j] * scale / demands[j].amount);

    // Every demand delivers exactly lambda * amount: trim in recorded order.
    for (size_t j = 0; j < demands.size(); ++j) {
        double want = lambda * demands[j].amount;
        for (const auto& [arcs, amt] : raw[j]) {
            if (want <= 0) break;
            double take = std::min(want, amt * scale);
            ConcurrentFlowResult::PathFlow pf{{}, arcs, take};
            pf.nodes.push_back(demands[j].source);
            for (int ai : arcs) pf.nodes.push_back(g.arcs[ai].to);
            result.per_demand[j].push_back(std::move(pf));
            want -= take;
        }
    }
    result.throughput = lambda;
    // Primal feasibility audit on every run.
    auto final_loads = result.resource_loads(g);
    for (int r = 0; r < m; ++r)
        if (g.resource_cap[r] > 0 && final_loads[r] > g.resource_cap[r] * (1.0 + 1e-9))
            throw NcndError("internal: concurrent flow exceeded a resource capacity");
    return result;
}

}  // namespace ncnd
