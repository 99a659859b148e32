#include "ncnd/steiner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>

namespace ncnd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Quota Steiner core shared by pnwst_approx and the density oracle: terminals
// appear with multiplicities (a pendant W-element is interchangeable with its
// siblings, so a source node simply carries a terminal count). Selection runs
// in doubles; exact costs are recomputed by the callers.
struct QuotaProblem {
    const UndirectedMultigraph* g;
    std::vector<double> weight;           // per node
    std::vector<std::int64_t> tcount;     // terminal multiplicity per node
    NodeId root;
};

struct NodePaths {
    std::vector<double> dist;
    std::vector<int> parent;
};

// Node-weighted shortest paths from `start`; a node's weight is charged on
// entry, nodes marked free cost nothing. Deterministic O(n^2) scan.
NodePaths node_dijkstra(const std::vector<std::vector<std::pair<NodeId, int>>>& adj,
                        const std::vector<double>& weight, const std::vector<char>& free_mask,
                        NodeId start) {
    const int n = static_cast<int>(adj.size());
    NodePaths out;
    out.dist.assign(n, kInf);
    out.parent.assign(n, -1);
    std::vector<char> done(n, 0);
    out.dist[start] = 0;
    while (true) {
        int best = -1;
        for (int v = 0; v < n; ++v)
            if (!done[v] && out.dist[v] < kInf && (best < 0 || out.dist[v] < out.dist[best]))
                best = v;
        if (best < 0) break;
        done[best] = 1;
        for (auto [to, e] : adj[best]) {
            (void)e;
            double w = free_mask[to] ? 0.0 : weight[to];
            if (out.dist[best] + w < out.dist[to]) {
                out.dist[to] = out.dist[best] + w;
                out.parent[to] = best;
            }
        }
    }
    return out;
}

// Greedy quota growth: repeatedly attach the min-density spider of uncovered
// terminal nodes to the root component (bought nodes are free, everything
// else pays its weight) until the component carries >= target terminal units.
// Returns the bought node set (connected, contains root).
std::vector<NodeId> spider_grow(const QuotaProblem& p,
                                const std::vector<std::vector<std::pair<NodeId, int>>>& adj,
                                const std::vector<char>& reach, std::int64_t target) {
    const int n = p.g->node_count();
    std::vector<char> bought(n, 0);
    bought[p.root] = 1;
    std::vector<char> pending(n, 0);  // terminal nodes not yet attached
    for (int v = 0; v < n; ++v)
        if (v != p.root && reach[v] && p.tcount[v] > 0) pending[v] = 1;

    auto units_in_root = [&] {
        std::int64_t total = 0;
        for (int v = 0; v < n; ++v)
            if (bought[v]) total += p.tcount[v];
        return total;
    };

    while (units_in_root() < target) {
        double best_density = kInf;
        double best_cost = kInf;
        NodeId best_center = -1;
        int best_k = 0;
        std::vector<std::pair<double, NodeId>> best_legs;
        NodePaths best_paths;

        for (NodeId center = 0; center < n; ++center) {
            if (!reach[center]) continue;
            NodePaths paths = node_dijkstra(adj, p.weight, bought, center);
            // Connection of the center to the root component.
            double to_root = kInf;
            for (int v = 0; v < n; ++v)
                if (bought[v]) to_root = std::min(to_root, paths.dist[v]);
            if (center == p.root || bought[center]) to_root = 0.0;
            if (to_root == kInf) continue;
            std::vector<std::pair<double, NodeId>> legs;
            for (int v = 0; v < n; ++v)
                if (pending[v] && paths.dist[v] < kInf) legs.push_back({paths.dist[v], v});
            if (legs.empty()) continue;
            std::sort(legs.begin(), legs.end());
            double acc = (bought[center] ? 0.0 : p.weight[center]) + to_root;
            std::int64_t units = 0;
            for (size_t k = 0; k < legs.size(); ++k) {
                acc += legs[k].first;
                units += p.tcount[legs[k].second];
                double density = acc / static_cast<double>(units);
                if (density < best_density - 1e-12 ||
                    (std::abs(density - best_density) <= 1e-12 && acc < best_cost)) {
                    best_density = density;
                    best_cost = acc;
                    best_center = center;
                    best_k = static_cast<int>(k + 1);
                    best_legs = legs;
                    best_paths = paths;
                }
            }
        }
        if (best_center < 0)
            throw InfeasibleError("spider merge stalled before reaching the target");

        // Buy the center, its connection to the root component, and the legs.
        std::set<NodeId> newly{best_center};
        {
            NodeId at = -1;
            double d = kInf;
            for (int v = 0; v < n; ++v)
                if (bought[v] && best_paths.dist[v] < d) {
                    d = best_paths.dist[v];
                    at = v;
                }
            while (at != -1 && at != best_center) {
                newly.insert(at);
                at = best_paths.parent[at];
            }
        }
        for (int leg = 0; leg < best_k; ++leg) {
            NodeId at = best_legs[leg].second;
            while (at != -1 && at != best_center) {
                newly.insert(at);
                at = best_paths.parent[at];
            }
        }
        for (NodeId v : newly) {
            bought[v] = 1;
            pending[v] = 0;
        }
    }

    std::vector<NodeId> comp;
    for (int v = 0; v < n; ++v)
        if (bought[v]) comp.push_back(v);
    return comp;
}

// Prune DP over a BFS spanning tree of the bought component: dp[v][j] =
// cheapest subtree rooted at v containing v with >= j terminal units
// (clamped at cap).
struct PruneDp {
    std::vector<std::vector<int>> children;
    std::vector<double> weight;
    std::vector<std::int64_t> tcount;
    std::int64_t cap;
    std::vector<std::vector<double>> dp;
    std::vector<std::vector<std::vector<std::int64_t>>> picks;

    void run(int v) {
        for (int c : children[v]) run(c);
        std::vector<double> cur(cap + 1, kInf);
        std::vector<std::vector<std::int64_t>> pick(cap + 1);
        std::int64_t self = std::min(tcount[v], cap);
        for (std::int64_t j = 0; j <= self; ++j) cur[j] = weight[v];
        for (int c : children[v]) {
            std::vector<double> next(cap + 1, kInf);
            std::vector<std::vector<std::int64_t>> next_pick(cap + 1);
            for (std::int64_t j = 0; j <= cap; ++j) {
                if (cur[j] == kInf) continue;
                if (cur[j] < next[j]) {
                    next[j] = cur[j];
                    next_pick[j] = pick[j];
                    next_pick[j].push_back(-1);
                }
                for (std::int64_t j2 = 1; j2 <= cap; ++j2) {
                    if (dp[c][j2] == kInf) continue;
                    std::int64_t nj = std::min(cap, j + j2);
                    double cand = cur[j] + dp[c][j2];
                    if (cand < next[nj]) {
                        next[nj] = cand;
                        next_pick[nj] = pick[j];
                        next_pick[nj].push_back(j2);
                    }
                }
            }
            cur = std::move(next);
            pick = std::move(next_pick);
        }
        for (std::int64_t j = cap - 1; j >= 0; --j)
            if (cur[j + 1] < cur[j]) {
                cur[j] = cur[j + 1];
                pick[j] = pick[j + 1];
            }
        dp[v] = std::move(cur);
        picks[v] = std::move(pick);
    }

    void extract(int v, std::int64_t j, std::vector<int>& out) const {
        out.push_back(v);
        const auto& pk = picks[v][j];
        for (size_t i = 0; i < pk.size(); ++i)
            if (pk[i] >= 1) extract(children[v][i], pk[i], out);
    }
};

struct GrownTree {
    std::vector<NodeId> comp;  // bought component nodes
    PruneDp dp;
    int root_idx = 0;
};

// Grow to `target` units and prepare the prune DP with clamp `cap`.
GrownTree grow_and_prepare(const QuotaProblem& p, std::int64_t target, std::int64_t cap) {
    auto adj = p.g->adjacency();
    auto reach = p.g->reachable_from(p.root);
    std::int64_t reachable = 0;
    for (int v = 0; v < p.g->node_count(); ++v)
        if (reach[v]) reachable += p.tcount[v];
    if (reachable < target)
        throw InfeasibleError("no connected subgraph of the root reaches the terminal target");

    GrownTree out;
    out.comp = spider_grow(p, adj, reach, target);
    std::sort(out.comp.begin(), out.comp.end());

    const int m = static_cast<int>(out.comp.size());
    std::vector<int> idx(p.g->node_count(), -1);
    for (int i = 0; i < m; ++i) idx[out.comp[i]] = i;
    out.dp.children.assign(m, {});
    out.dp.weight.resize(m);
    out.dp.tcount.resize(m);
    for (int i = 0; i < m; ++i) {
        out.dp.weight[i] = p.weight[out.comp[i]];
        out.dp.tcount[i] = p.tcount[out.comp[i]];
    }
    out.root_idx = idx[p.root];
    std::vector<char> seen(m, 0);
    std::deque<int> queue{out.root_idx};
    seen[out.root_idx] = 1;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (auto [to, e] : adj[out.comp[u]]) {
            (void)e;
            int t = idx[to];
            if (t >= 0 && !seen[t]) {
                seen[t] = 1;
                out.dp.children[u].push_back(t);
                queue.push_back(t);
            }
        }
    }
    out.dp.cap = cap;
    out.dp.dp.assign(m, {});
    out.dp.picks.assign(m, {});
    out.dp.run(out.root_idx);
    return out;
}

}  // namespace

PnwstResult pnwst_approx(const PnwstQuery& q) {
    const UndirectedMultigraph& g = *q.graph;
    const int n = g.node_count();
    if (q.root < 0 || q.root >= n) throw std::invalid_argument("pnwst root out of range");
    if (static_cast<int>(q.beta.size()) != n || static_cast<int>(q.is_terminal.size()) != n)
        throw std::invalid_argument("pnwst query vectors must match the graph");
    for (const auto& b : q.beta)
        if (b < 0) throw std::invalid_argument("pnwst weights must be nonnegative");

    QuotaProblem p;
    p.g = &g;
    p.root = q.root;
    p.weight.resize(n);
    p.tcount.resize(n);
    for (int v = 0; v < n; ++v) {
        p.weight[v] = to_double(q.beta[v]);
        p.tcount[v] = q.is_terminal[v] ? 1 : 0;
    }
    const std::int64_t target = std::max<std::int64_t>(q.target, 0);
    GrownTree grown = grow_and_prepare(p, target, std::max<std::int64_t>(target, 1));
    if (target > 0 && grown.dp.dp[grown.root_idx][target] == kInf)
        throw InfeasibleError("prune failed to meet the terminal target");

    std::vector<int> picked;
    if (target > 0)
        grown.dp.extract(grown.root_idx, target, picked);
    else
        picked.push_back(grown.root_idx);

    PnwstResult result;
    for (int i : picked) result.tree.push_back(grown.comp[i]);
    std::sort(result.tree.begin(), result.tree.end());
    result.tree.erase(std::unique(result.tree.begin(), result.tree.end()), result.tree.end());
    result.cost = 0;
    result.terminals_covered = 0;
    for (NodeId v : result.tree) {
        result.cost += q.beta[v];
        if (q.is_terminal[v]) ++result.terminals_covered;
    }
    // Contract checks on every call: connected, root-containing, quota met.
    if (!std::binary_search(result.tree.begin(), result.tree.end(), q.root))
        throw NcndError("internal: pnwst tree lost its root");
    if (result.terminals_covered < target)
        throw NcndError("internal: pnwst tree misses its terminal target");
    {
        std::set<NodeId> in_tree(result.tree.begin(), result.tree.end());
        std::set<NodeId> seen{q.root};
        std::deque<NodeId> queue{q.root};
        auto adj2 = g.adjacency();
        while (!queue.empty()) {
            NodeId u = queue.front();
            queue.pop_front();
            for (auto [to, e] : adj2[u]) {
                (void)e;
                if (in_tree.count(to) && !seen.count(to)) {
                    seen.insert(to);
                    queue.push_back(to);
                }
            }
        }
        if (seen.size() != in_tree.size())
            throw NcndError("internal: pnwst tree is not connected");
    }
    return result;
}

WElements WElements::build(const SsncInstance& inst) {
    WElements w;
    w.of_source.resize(inst.sources.size());
    for (size_t i = 0; i < inst.sources.size(); ++i) {
        for (std::int64_t j = 0; j < inst.sources[i].second; ++j) {
            w.of_source[i].push_back(static_cast<int>(w.source_of.size()));
            w.source_of.push_back(static_cast<int>(i));
        }
    }
    return w;
}

DensityCandidate max_density_tree(const SsncInstance& inst, const WElements& welems,
                                  const std::vector<Rational>& beta,
                                  const std::vector<char>& covered,
                                  const std::vector<char>* excluded) {
    const int n = inst.graph.node_count();
    // Uncovered terminal units per node (pendant W-elements collapse onto
    // their source since they are free and interchangeable).
    std::vector<std::int64_t> units(n, 0);
    std::vector<std::vector<int>> uncovered_of_node(n);
    for (int e = 0; e < welems.count(); ++e) {
        if (covered[e]) continue;
        NodeId s = inst.sources[welems.source_of[e]].first;
        units[s]++;
        uncovered_of_node[s].push_back(e);
    }
    std::int64_t total_uncovered = 0;
    for (int v = 0; v < n; ++v) total_uncovered += units[v];
    if (total_uncovered == 0) throw InfeasibleError("all terminals already covered");

    const std::int64_t q = inst.capacity;
    const std::int64_t sweep_cap = static_cast<std::int64_t>(std::ceil(
        static_cast<double>(q) * (1.0 + (q > 1 ? std::log2(static_cast<double>(q)) : 0.0))));
    const std::int64_t ell_max = std::min(total_uncovered, std::max(q, sweep_cap));

    QuotaProblem p;
    p.g = &inst.graph;
    p.weight.resize(n);
    p.tcount = units;
    for (int v = 0; v < n; ++v)
        p.weight[v] = (excluded && (*excluded)[v]) ? kInf : to_double(beta[v]);
    if (excluded)
        for (int v = 0; v < n; ++v)
            if ((*excluded)[v] && units[v] > 0)
                throw InfeasibleError("a terminal node hit the hard load cap");

    // Family-1 roots: terminal nodes with uncovered demand plus their
    // neighbors, excluding the sink.
    std::set<NodeId> roots1;
    auto adj = inst.graph.adjacency();
    for (int v = 0; v < n; ++v)
        if (units[v] > 0) {
            roots1.insert(v);
            for (auto [to, e] : adj[v]) {
                (void)e;
                roots1.insert(to);
            }
        }
    roots1.erase(inst.sink);

    std::optional<DensityCandidate> best;
    auto consider_root = [&](NodeId root, std::int64_t ell_lo, int family) {
        QuotaProblem pr = p;
        pr.root = root;
        auto reach = inst.graph.reachable_from(root);
        std::int64_t reachable = 0;
        for (int v = 0; v < n; ++v)
            if (reach[v]) reachable += units[v];
        std::int64_t hi = std::min(ell_max, reachable);
        if (hi < ell_lo) return;
        GrownTree grown;
        try {
            grown = grow_and_prepare(pr, hi, hi);
        } catch (const InfeasibleError&) {
            return;
        }
        for (std::int64_t ell = ell_lo; ell <= hi; ++ell) {
            if (grown.dp.dp[grown.root_idx][ell] == kInf) continue;
            std::vector<int> picked;
            grown.dp.extract(grown.root_idx, ell, picked);
            DensityCandidate cand;
            cand.family = family;
            cand.root = root;
            for (int i : picked) cand.tree.push_back(grown.comp[i]);
            std::sort(cand.tree.begin(), cand.tree.end());
            cand.tree.erase(std::unique(cand.tree.begin(), cand.tree.end()), cand.tree.end());
            cand.cost = 0;
            for (NodeId v : cand.tree) {
                cand.cost += beta[v];
                for (int e : uncovered_of_node[v]) cand.covered.push_back(e);
            }
            if (cand.covered.empty()) continue;
            std::sort(cand.covered.begin(), cand.covered.end());
            std::set<int> all;
            for (NodeId v : cand.tree)
                for (size_t si = 0; si < inst.sources.size(); ++si)
                    if (inst.sources[si].first == v)
                        for (int e2 : welems.of_source[si]) all.insert(e2);
            cand.all_welems.assign(all.begin(), all.end());
            cand.density = cand.cost / Rational(static_cast<long long>(cand.covered.size()));
            if (!best || cand.density < best->density ||
                (cand.density == best->density && cand.tree < best->tree))
                best = std::move(cand);
        }
    };

    if (ell_max >= q)
        for (NodeId r : roots1) consider_root(r, q, 1);
    consider_root(inst.sink, 1, 2);

    if (!best) throw InfeasibleError("no family-valid tree exists");
    return *best;
}

}  // namespace ncnd
