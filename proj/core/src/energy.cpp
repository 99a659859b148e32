#include "ncnd/energy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ncnd {

EevrpInstance EevrpInstance::create(UndirectedMultigraph graph, std::vector<RequestPair> pairs,
                                    double static_power, double exponent) {
    if (exponent <= 1.0) throw std::invalid_argument("exponent alpha must exceed 1");
    if (static_power < 1.0)
        throw std::invalid_argument(
            "static power below 1 degenerates the tier structure; use plain convex routing");
    const double n = static_cast<double>(std::max(2, graph.node_count()));
    if (static_cast<double>(pairs.size()) > 16.0 * n * n * n)
        throw std::invalid_argument("pair count must stay polynomial in n");
    for (const auto& p : pairs) {
        if (p.demand != 1) throw std::invalid_argument("unit demands only");
        if (p.source == p.sink || p.source < 0 || p.sink < 0 ||
            p.source >= graph.node_count() || p.sink >= graph.node_count())
            throw std::invalid_argument("bad request pair");
    }
    EevrpInstance e;
    e.graph = std::move(graph);
    e.pairs = std::move(pairs);
    e.static_power = static_power;
    e.exponent = exponent;
    return e;
}

EnergyReduction reduce_to_mcnc(const EevrpInstance& e) {
    const int n = e.graph.node_count();
    const std::int64_t k = static_cast<std::int64_t>(e.pairs.size());
    TieredReduction red;
    red.q_prime = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(std::pow(e.static_power, 1.0 / e.exponent) - 1e-12)));
    red.copies_per_node = static_cast<int>(std::max<std::int64_t>(
        1, (k + red.q_prime - 1) / red.q_prime));

    red.tier_costs.resize(red.copies_per_node);
    for (int i = 1; i <= red.copies_per_node; ++i) {
        if (i == 1) {
            red.tier_costs[0] = 2.0 * e.static_power;
        } else {
            double hi = std::pow(static_cast<double>(i) * red.q_prime, e.exponent);
            double lo = std::pow(static_cast<double>(i - 1) * red.q_prime + 1.0, e.exponent);
            red.tier_costs[i - 1] = hi - lo;
        }
    }
    // The dynamic tiers grow with i; the first tier carries the static power
    // and may sit above the second for small exponents.
    for (int i = 2; i < red.copies_per_node; ++i)
        if (red.tier_costs[i] + 1e-9 < red.tier_costs[i - 1])
            throw std::invalid_argument("dynamic tier costs must be non-decreasing");

    std::vector<Rational> cost;
    std::vector<std::string> labels;
    std::vector<std::pair<NodeId, NodeId>> edges;
    red.copies_of.assign(n, {});
    for (int v = 0; v < n; ++v) {
        for (int i = 0; i < red.copies_per_node; ++i) {
            NodeId id = static_cast<NodeId>(cost.size());
            red.copies_of[v].push_back(id);
            red.original_of.push_back(v);
            cost.push_back(rational_from_double(red.tier_costs[i]));
            labels.push_back(e.graph.labels[v] + "#" + std::to_string(i + 1));
        }
    }
    for (auto [u, v] : e.graph.edges)
        for (NodeId cu : red.copies_of[u])
            for (NodeId cv : red.copies_of[v]) edges.push_back({cu, cv});

    // Each terminal becomes a pendant off the cheapest copy of its vertex.
    std::vector<RequestPair> pairs;
    for (const auto& p : e.pairs) {
        RequestPair rp;
        for (auto [endpoint, target] :
             {std::make_pair(p.source, &rp.source), std::make_pair(p.sink, &rp.sink)}) {
            NodeId pendant = static_cast<NodeId>(cost.size());
            cost.push_back(Rational(0));
            labels.push_back(e.graph.labels[endpoint] + "+t");
            edges.push_back({pendant, red.copies_of[endpoint][0]});
            red.original_of.push_back(-1);
            red.pendant_home[pendant] = endpoint;
            *target = pendant;
        }
        rp.demand = 1;
        pairs.push_back(rp);
    }

    EnergyReduction out;
    out.mcnc = McncInstance::create(
        UndirectedMultigraph::create(std::move(cost), std::move(labels), std::move(edges)),
        std::move(pairs), red.q_prime);
    out.tiers = std::move(red);
    return out;
}

double energy_of(const std::map<int, std::vector<std::pair<std::vector<NodeId>, double>>>& routing,
                 double sigma, double alpha) {
    std::map<NodeId, double> load;
    for (const auto& [pid, paths] : routing) {
        (void)pid;
        for (const auto& [path, fraction] : paths) {
            std::set<NodeId> uniq(path.begin(), path.end());
            for (NodeId v : uniq) load[v] += fraction;
        }
    }
    double total = 0.0;
    for (const auto& [v, f] : load) {
        (void)v;
        if (f > 0) total += sigma + std::pow(f, alpha);
    }
    return total;
}

LiftedSolution lift_solution(const Solution& sol, const EnergyReduction& red,
                             const EevrpInstance& e, std::optional<double> cost_ratio) {
    LiftedSolution lifted;
    for (const auto& pr : sol.routing) {
        auto& out_paths = lifted.routing[pr.pair_idx];
        for (const auto& [path, fraction] : pr.paths) {
            std::vector<NodeId> orig;
            for (NodeId v : path) {
                NodeId o;
                if (v < static_cast<NodeId>(red.tiers.original_of.size()) &&
                    red.tiers.original_of[v] >= 0) {
                    o = red.tiers.original_of[v];
                } else {
                    auto it = red.tiers.pendant_home.find(v);
                    if (it == red.tiers.pendant_home.end()) {
                        // Dummy pendant introduced by the MCNC constructor;
                        // it sits on another pendant or copy.
                        NodeId owner = red.mcnc.original_of(v);
                        auto it2 = red.tiers.pendant_home.find(owner);
                        o = it2 != red.tiers.pendant_home.end() ? it2->second
                                                          : red.tiers.original_of.at(owner);
                    } else {
                        o = it->second;
                    }
                }
                if (orig.empty() || orig.back() != o) orig.push_back(o);
            }
            // Collapsing copies must leave a simple path over original nodes.
            std::set<NodeId> seen;
            auto adj = e.graph.adjacency();
            for (size_t i = 0; i < orig.size(); ++i) {
                if (!seen.insert(orig[i]).second)
                    throw MalformedSolutionError("path uses copies of a vertex inconsistently");
                if (i + 1 < orig.size()) {
                    bool edge = false;
                    for (auto [to, idx] : adj[orig[i]]) {
                        (void)idx;
                        if (to == orig[i + 1]) edge = true;
                    }
                    if (!edge)
                        throw MalformedSolutionError("collapsed path leaves the original graph");
                }
            }
            out_paths.push_back({std::move(orig), fraction});
        }
    }
    lifted.energy = energy_of(lifted.routing, e.static_power, e.exponent);
    double rho1 = cost_ratio.value_or(1.0);
    double rho2 = std::max(1.0, sol.congestion_over_q);
    lifted.bicriteria_factor = rho1 * std::pow(rho2, e.exponent);
    return lifted;
}

}  // namespace ncnd
