#include "ncnd/oracle.hpp"

#include "ncnd/flow.hpp"
#include "ncnd/lp.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <set>

namespace ncnd {
namespace {

struct Deadline {
    std::chrono::steady_clock::time_point until;
    explicit Deadline(double seconds)
        : until(std::chrono::steady_clock::now() +
                std::chrono::microseconds(static_cast<long long>(seconds * 1e6))) {}
    void poll() const {
        if (std::chrono::steady_clock::now() > until)
            throw ExhaustedError("oracle ran past its time cap");
    }
};

// All node subsets (bitmasks over `free_nodes`) ordered by total cost or size.
std::vector<std::uint32_t> ordered_masks(const std::vector<Rational>& free_cost,
                                         EnumOrder order) {
    const int k = static_cast<int>(free_cost.size());
    if (k > 22) throw ExhaustedError("subset enumeration past budget");
    std::vector<std::uint32_t> masks(1u << k);
    for (std::uint32_t m = 0; m < masks.size(); ++m) masks[m] = m;
    if (order == EnumOrder::CostAscending) {
        std::vector<Rational> cost(masks.size(), Rational(0));
        for (std::uint32_t m = 1; m < masks.size(); ++m) {
            std::uint32_t low = m & (m - 1);
            int bit = std::countr_zero(m);
            cost[m] = cost[low] + free_cost[bit];
        }
        std::stable_sort(masks.begin(), masks.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (cost[a] != cost[b]) return cost[a] < cost[b];
            return a < b;
        });
    } else {
        std::stable_sort(masks.begin(), masks.end(), [&](std::uint32_t a, std::uint32_t b) {
            int pa = std::popcount(a), pb = std::popcount(b);
            if (pa != pb) return pa < pb;
            return a < b;
        });
    }
    return masks;
}

// Simple paths between two nodes in an undirected graph, as node lists.
void enumerate_paths(const std::vector<std::vector<std::pair<NodeId, int>>>& adj, NodeId from,
                     NodeId to, std::vector<std::vector<NodeId>>& out, size_t cap,
                     const Deadline& deadline) {
    std::vector<NodeId> path{from};
    std::vector<char> used(adj.size(), 0);
    used[from] = 1;
    std::function<void(NodeId)> dfs = [&](NodeId at) {
        deadline.poll();
        if (out.size() >= cap) throw ExhaustedError("path enumeration past budget");
        if (at == to) {
            out.push_back(path);
            return;
        }
        for (auto [nxt, e] : adj[at]) {
            (void)e;
            if (used[nxt]) continue;
            used[nxt] = 1;
            path.push_back(nxt);
            dfs(nxt);
            path.pop_back();
            used[nxt] = 0;
        }
    };
    dfs(from);
}

// Joint unsplittable assignment: one path per demand, node loads <= cap.
bool assignment_exists(const std::vector<std::vector<std::vector<NodeId>>>& choices,
                       const std::vector<std::int64_t>& demands,
                       const std::map<NodeId, std::int64_t>& caps, const Deadline& deadline) {
    std::map<NodeId, std::int64_t> load;
    std::function<bool(size_t)> rec = [&](size_t i) -> bool {
        deadline.poll();
        if (i == choices.size()) return true;
        for (const auto& path : choices[i]) {
            bool ok = true;
            for (NodeId v : path) {
                auto it = caps.find(v);
                if (it != caps.end() && load[v] + demands[i] > it->second) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            for (NodeId v : path) load[v] += demands[i];
            if (rec(i + 1)) return true;
            for (NodeId v : path) load[v] -= demands[i];
        }
        return false;
    };
    return rec(0);
}

}  // namespace

ExactSsncResult exact_ssnc(const SsncInstance& inst, const OracleBudget& budget, EnumOrder order) {
    const int n = inst.graph.node_count();
    if (n > budget.max_nodes) throw ExhaustedError("instance larger than the oracle budget");
    Deadline deadline(budget.time_cap_seconds);

    // Terminal nodes and the sink are always kept.
    std::vector<char> pinned(n, 0);
    pinned[inst.sink] = 1;
    for (auto [s, d] : inst.sources) {
        (void)d;
        pinned[s] = 1;
    }
    std::vector<NodeId> free_nodes;
    std::vector<Rational> free_cost;
    for (int v = 0; v < n; ++v)
        if (!pinned[v]) {
            free_nodes.push_back(v);
            free_cost.push_back(inst.graph.node_cost[v]);
        }

    Rational pinned_cost = 0;
    for (int v = 0; v < n; ++v)
        if (pinned[v] && v != inst.sink) pinned_cost += inst.graph.node_cost[v];

    const bool check_unsplittable =
        static_cast<int>(inst.sources.size()) <= budget.max_pairs;
    std::int64_t total = inst.total_demand();

    auto feasible = [&](const std::vector<NodeId>& keep) -> bool {
        deadline.poll();
        auto sub = induced_subgraph(inst.graph, keep);
        const int m = sub.graph.node_count();
        NodeId sink = sub.from_original[inst.sink];
        // Fractional check: super-source -> per-source demand gate -> source.
        int extra = static_cast<int>(inst.sources.size());
        std::vector<std::pair<NodeId, NodeId>> arcs;
        for (auto [u, v] : sub.graph.edges) {
            arcs.push_back({u, v});
            arcs.push_back({v, u});
        }
        std::vector<std::int64_t> caps(m + extra + 1);
        std::vector<Rational> costs(m + extra + 1, Rational(0));
        for (int v = 0; v < m; ++v)
            caps[v] = inst.capacity_of(sub.to_original[v]);
        NodeId super = m + extra;
        caps[super] = kUnboundedCap;
        for (size_t i = 0; i < inst.sources.size(); ++i) {
            NodeId gate = m + static_cast<int>(i);
            caps[gate] = inst.sources[i].second;
            arcs.push_back({super, gate});
            arcs.push_back({gate, sub.from_original[inst.sources[i].first]});
        }
        auto dg = DirectedNodeCapGraph::create(m + extra + 1, arcs, caps, costs);
        if (max_flow_node_cap(dg, super, sink).value != total) return false;
        if (!check_unsplittable) return true;

        auto adj = sub.graph.adjacency();
        std::vector<std::vector<std::vector<NodeId>>> choices;
        std::vector<std::int64_t> demands;
        std::map<NodeId, std::int64_t> node_caps;
        for (int v = 0; v < m; ++v)
            if (v != sink) node_caps[v] = inst.capacity_of(sub.to_original[v]);
        for (auto [s, d] : inst.sources) {
            std::vector<std::vector<NodeId>> paths;
            enumerate_paths(adj, sub.from_original[s], sink, paths, 20000, deadline);
            if (paths.empty()) return false;
            choices.push_back(std::move(paths));
            demands.push_back(d);
        }
        return assignment_exists(choices, demands, node_caps, deadline);
    };

    ExactSsncResult res;
    res.unsplittable_checked = check_unsplittable;
    for (std::uint32_t mask : ordered_masks(free_cost, order)) {
        std::vector<NodeId> keep;
        for (int v = 0; v < n; ++v)
            if (pinned[v]) keep.push_back(v);
        for (size_t i = 0; i < free_nodes.size(); ++i)
            if (mask & (1u << i)) keep.push_back(free_nodes[i]);
        if (feasible(keep)) {
            res.feasible = true;
            res.nodes = keep;
            std::sort(res.nodes.begin(), res.nodes.end());
            res.cost = pinned_cost;
            for (size_t i = 0; i < free_nodes.size(); ++i)
                if (mask & (1u << i)) res.cost += free_cost[i];
            if (order == EnumOrder::CostAscending) return res;  // first hit is optimal
        }
        if (res.feasible && order == EnumOrder::SizeAscending) {
            // keep scanning for the cheapest among all sizes
        }
    }
    if (order == EnumOrder::SizeAscending && res.feasible) {
        // Size order is not cost order: rescan exhaustively for the minimum.
        Rational best = res.cost;
        std::vector<NodeId> best_nodes = res.nodes;
        for (std::uint32_t mask : ordered_masks(free_cost, EnumOrder::SizeAscending)) {
            Rational cost = pinned_cost;
            for (size_t i = 0; i < free_nodes.size(); ++i)
                if (mask & (1u << i)) cost += free_cost[i];
            if (cost >= best) continue;
            std::vector<NodeId> keep;
            for (int v = 0; v < n; ++v)
                if (pinned[v]) keep.push_back(v);
            for (size_t i = 0; i < free_nodes.size(); ++i)
                if (mask & (1u << i)) keep.push_back(free_nodes[i]);
            if (feasible(keep)) {
                best = cost;
                best_nodes = keep;
                std::sort(best_nodes.begin(), best_nodes.end());
            }
        }
        res.cost = best;
        res.nodes = best_nodes;
    }
    return res;
}

ExactMcncResult exact_mcnc_fractional(const McncInstance& inst, const OracleBudget& budget,
                                      EnumOrder order) {
    const int n = inst.graph.node_count();
    if (n > budget.max_nodes) throw ExhaustedError("instance larger than the oracle budget");
    Deadline deadline(budget.time_cap_seconds);

    std::vector<char> pinned(n, 0);
    for (const auto& p : inst.pairs) pinned[p.source] = pinned[p.sink] = 1;
    std::vector<NodeId> free_nodes;
    std::vector<Rational> free_cost;
    for (int v = 0; v < n; ++v)
        if (!pinned[v]) {
            free_nodes.push_back(v);
            free_cost.push_back(inst.graph.node_cost[v]);
        }
    Rational pinned_cost = 0;
    for (int v = 0; v < n; ++v)
        if (pinned[v]) pinned_cost += inst.graph.node_cost[v];

    auto fractional_ok = [&](const std::vector<NodeId>& keep) -> bool {
        deadline.poll();
        auto sub = induced_subgraph(inst.graph, keep);
        auto adj = sub.graph.adjacency();
        LinearProgram lp;
        int lambda = lp.add_variable(Rational(1));
        std::vector<std::vector<std::pair<int, Rational>>> node_terms(sub.graph.node_count());
        std::vector<std::vector<std::pair<int, Rational>>> pair_terms(inst.pairs.size());
        for (size_t i = 0; i < inst.pairs.size(); ++i) {
            NodeId s = sub.from_original[inst.pairs[i].source];
            NodeId t = sub.from_original[inst.pairs[i].sink];
            if (s < 0 || t < 0) return false;
            std::vector<std::vector<NodeId>> paths;
            enumerate_paths(adj, s, t, paths, 20000, deadline);
            if (paths.empty()) return false;
            for (const auto& path : paths) {
                int var = lp.add_variable(Rational(0));
                pair_terms[i].push_back({var, Rational(1)});
                for (NodeId v : path) node_terms[v].push_back({var, Rational(1)});
            }
        }
        for (size_t i = 0; i < inst.pairs.size(); ++i) {
            // lambda - sum f <= 0
            auto terms = pair_terms[i];
            for (auto& [var, c] : terms) c = -c;
            terms.push_back({lambda, Rational(1)});
            lp.add_constraint(terms, Rational(0));
        }
        for (int v = 0; v < sub.graph.node_count(); ++v)
            lp.add_constraint(node_terms[v], Rational(inst.capacity));
        auto sol = lp_maximize(lp);
        return sol && sol->value >= 1;
    };

    ExactMcncResult res;
    for (std::uint32_t mask : ordered_masks(free_cost, order)) {
        std::vector<NodeId> keep;
        for (int v = 0; v < n; ++v)
            if (pinned[v]) keep.push_back(v);
        for (size_t i = 0; i < free_nodes.size(); ++i)
            if (mask & (1u << i)) keep.push_back(free_nodes[i]);
        if (fractional_ok(keep)) {
            res.feasible = true;
            res.nodes = keep;
            std::sort(res.nodes.begin(), res.nodes.end());
            res.cost = pinned_cost;
            for (size_t i = 0; i < free_nodes.size(); ++i)
                if (mask & (1u << i)) res.cost += free_cost[i];
            break;
        }
    }
    if (!res.feasible) return res;

    if (static_cast<int>(inst.pairs.size()) <= 3) {
        // Integral-path optimum by assignment enumeration.
        std::optional<Rational> best;
        for (std::uint32_t mask : ordered_masks(free_cost, EnumOrder::CostAscending)) {
            std::vector<NodeId> keep;
            for (int v = 0; v < n; ++v)
                if (pinned[v]) keep.push_back(v);
            for (size_t i = 0; i < free_nodes.size(); ++i)
                if (mask & (1u << i)) keep.push_back(free_nodes[i]);
            auto sub = induced_subgraph(inst.graph, keep);
            auto adj = sub.graph.adjacency();
            std::vector<std::vector<std::vector<NodeId>>> choices;
            std::vector<std::int64_t> demands;
            std::map<NodeId, std::int64_t> caps;
            for (int v = 0; v < sub.graph.node_count(); ++v) caps[v] = inst.capacity;
            bool ok = true;
            for (const auto& p : inst.pairs) {
                NodeId s = sub.from_original[p.source];
                NodeId t = sub.from_original[p.sink];
                if (s < 0 || t < 0) {
                    ok = false;
                    break;
                }
                std::vector<std::vector<NodeId>> paths;
                enumerate_paths(adj, s, t, paths, 20000, deadline);
                if (paths.empty()) {
                    ok = false;
                    break;
                }
                choices.push_back(std::move(paths));
                demands.push_back(1);
            }
            if (ok && assignment_exists(choices, demands, caps, deadline)) {
                Rational cost = pinned_cost;
                for (size_t i = 0; i < free_nodes.size(); ++i)
                    if (mask & (1u << i)) cost += free_cost[i];
                best = cost;
                break;
            }
        }
        res.integral_cost = best;
    }
    return res;
}

std::optional<ExactTreeResult> exact_pnwst(const PnwstQuery& q, const OracleBudget& budget,
                                           EnumOrder order) {
    const UndirectedMultigraph& g = *q.graph;
    const int n = g.node_count();
    if (n > budget.max_nodes) throw ExhaustedError("instance larger than the oracle budget");
    Deadline deadline(budget.time_cap_seconds);
    auto adj = g.adjacency();

    auto connected = [&](std::uint32_t mask) -> bool {
        int start = std::countr_zero(mask);
        std::uint32_t seen = 1u << start;
        std::deque<int> queue{start};
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (auto [to, e] : adj[u]) {
                (void)e;
                if ((mask >> to & 1u) && !(seen >> to & 1u)) {
                    seen |= 1u << to;
                    queue.push_back(to);
                }
            }
        }
        return seen == mask;
    };

    std::optional<ExactTreeResult> best;
    std::vector<std::uint32_t> masks((1u << n));
    for (std::uint32_t m = 0; m < masks.size(); ++m) masks[m] = m;
    if (order == EnumOrder::SizeAscending)
        std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
            int pa = std::popcount(a), pb = std::popcount(b);
            return pa != pb ? pa < pb : a < b;
        });
    for (std::uint32_t mask : masks) {
        if (!(mask >> q.root & 1u) || mask == 0) continue;
        deadline.poll();
        std::int64_t terms = 0;
        for (int v = 0; v < n; ++v)
            if ((mask >> v & 1u) && q.is_terminal[v]) ++terms;
        if (terms < q.target) continue;
        if (!connected(mask)) continue;
        Rational cost = 0;
        for (int v = 0; v < n; ++v)
            if (mask >> v & 1u) cost += q.beta[v];
        if (!best || cost < best->cost) {
            best = ExactTreeResult{};
            for (int v = 0; v < n; ++v)
                if (mask >> v & 1u) best->tree.push_back(v);
            best->cost = cost;
        }
    }
    return best;
}

std::optional<ExactDensityResult> exact_density(const SsncInstance& inst, const WElements& welems,
                                                const std::vector<Rational>& beta,
                                                const std::vector<char>& covered,
                                                const OracleBudget& budget) {
    const int n = inst.graph.node_count();
    if (n > budget.max_nodes) throw ExhaustedError("instance larger than the oracle budget");
    Deadline deadline(budget.time_cap_seconds);
    auto adj = inst.graph.adjacency();

    std::vector<std::vector<int>> uncovered_of_node(n), all_of_node(n);
    for (int e = 0; e < welems.count(); ++e) {
        NodeId s = inst.sources[welems.source_of[e]].first;
        all_of_node[s].push_back(e);
        if (!covered[e]) uncovered_of_node[s].push_back(e);
    }
    const std::int64_t cap = [&] {
        std::int64_t q = inst.capacity;
        if (q <= 1) return std::max<std::int64_t>(q, 1);
        return static_cast<std::int64_t>(
            std::ceil(static_cast<double>(q) * (1.0 + std::log2(static_cast<double>(q))) - 1e-9));
    }();

    std::optional<ExactDensityResult> best;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        deadline.poll();
        // connectivity
        int start = std::countr_zero(mask);
        std::uint32_t seen = 1u << start;
        std::deque<int> queue{start};
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (auto [to, e] : adj[u]) {
                (void)e;
                if ((mask >> to & 1u) && !(seen >> to & 1u)) {
                    seen |= 1u << to;
                    queue.push_back(to);
                }
            }
        }
        if (seen != mask) continue;
        std::int64_t newly = 0, total_demand = 0;
        for (int v = 0; v < n; ++v)
            if (mask >> v & 1u) {
                newly += static_cast<std::int64_t>(uncovered_of_node[v].size());
                total_demand += static_cast<std::int64_t>(all_of_node[v].size());
            }
        if (newly == 0) continue;
        bool has_sink = (mask >> inst.sink & 1u) != 0;
        if (!has_sink && newly < inst.capacity) continue;  // family 1 floor
        if (total_demand > cap && !has_sink) continue;     // family demand cap
        Rational cost = 0;
        for (int v = 0; v < n; ++v)
            if (mask >> v & 1u) cost += beta[v];
        Rational density = cost / Rational(newly);
        if (!best || density < best->density) {
            best = ExactDensityResult{};
            for (int v = 0; v < n; ++v)
                if (mask >> v & 1u) {
                    best->tree.push_back(v);
                    for (int e : uncovered_of_node[v]) best->covered.push_back(e);
                }
            best->cost = cost;
            best->density = density;
        }
    }
    return best;
}

RatioRecord ratio_report(const std::string& digest, const Rational& solver_cost,
                         const std::optional<Rational>& oracle_cost, const Rational& congestion,
                         AuditLedger& ledger) {
    RatioRecord rec;
    rec.instance_digest = digest;
    rec.solver_cost = solver_cost;
    rec.oracle_cost = oracle_cost;
    rec.congestion = congestion;
    if (oracle_cost && *oracle_cost > 0) {
        rec.ratio = solver_cost / *oracle_cost;
        rec.flagged = solver_cost < *oracle_cost;
    } else if (oracle_cost) {
        rec.ratio = std::nullopt;
        rec.flagged = solver_cost < *oracle_cost;
    } else {
        rec.flagged = true;  // oracle exhausted; ratio omitted
    }
    ledger.check("ratio_report", 0, "cost ratio vs oracle " + digest,
                 rec.ratio ? format_rational(*rec.ratio) : "n/a",
                 "solver >= oracle", !rec.flagged,
                 oracle_cost ? "" : "oracle exhausted");
    return rec;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string graph_digest_body(const UndirectedMultigraph& g) {
    std::string body = std::to_string(g.node_count()) + ";";
    for (const auto& c : g.node_cost) body += format_rational(c) + ",";
    body += ";";
    auto edges = g.edges;
    std::sort(edges.begin(), edges.end());
    for (auto [u, v] : edges) body += std::to_string(u) + "-" + std::to_string(v) + ",";
    return body;
}

}  // namespace

std::string instance_digest(const SsncInstance& inst) {
    std::string body = graph_digest_body(inst.graph) + "|t=" + std::to_string(inst.sink) +
                       "|q=" + std::to_string(inst.capacity) + "|";
    for (auto [s, d] : inst.sources) body += std::to_string(s) + ":" + std::to_string(d) + ",";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    return std::string("ssnc-") + buf;
}

std::string instance_digest(const McncInstance& inst) {
    std::string body = graph_digest_body(inst.graph) + "|q=" + std::to_string(inst.capacity) + "|";
    for (const auto& p : inst.pairs)
        body += std::to_string(p.source) + ":" + std::to_string(p.sink) + ",";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    return std::string("mcnc-") + buf;
}

}  // namespace ncnd
