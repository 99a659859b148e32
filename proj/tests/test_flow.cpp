#include "doctest.h"

#include "ncnd/flow.hpp"
#include "ncnd/lp.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace ncnd;

namespace {

DirectedNodeCapGraph line(std::vector<std::int64_t> caps) {
    std::vector<std::pair<NodeId, NodeId>> arcs;
    for (size_t i = 0; i + 1 < caps.size(); ++i)
        arcs.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1)});
    return DirectedNodeCapGraph::create(static_cast<int>(caps.size()), arcs, caps,
                                        std::vector<Rational>(caps.size(), Rational(0)));
}

}  // namespace

TEST_CASE("max_flow_node_cap examples") {
    SUBCASE("single arc, cap 3") {
        auto res = max_flow_node_cap(line({3, kUnboundedCap}), 0, 1);
        CHECK(res.value == 3);
    }
    SUBCASE("disconnected") {
        auto g = DirectedNodeCapGraph::create(2, {}, {1, 1}, {Rational(0), Rational(0)});
        auto res = max_flow_node_cap(g, 0, 1);
        CHECK(res.value == 0);
        CHECK(res.flow.demands.empty());
    }
}

TEST_CASE("min_cost_flow_node_cap examples") {
    // Diamond: 0 -> {1 cheap cap-2, 2 costly} -> 3.
    auto mk = [](std::int64_t) {
        return DirectedNodeCapGraph::create(
            4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}, {kUnboundedCap, 2, kUnboundedCap, kUnboundedCap},
            {Rational(0), Rational(1), Rational(10), Rational(0)});
    };
    SUBCASE("single source takes the cheap path") {
        auto paths = min_cost_flow_node_cap(mk(0), {0}, 3, 5);
        REQUIRE(paths.size() == 1);
        CHECK(paths[0] == std::vector<NodeId>{0, 1, 3});
    }
    SUBCASE("three units through cap-2 node: one detours; cost is optimal") {
        auto g = mk(0);
        // Node capacities bind through the per-node cap parameter: emulate
        // per-node caps by leaving node 1 at cap 2 via its own capacity. Here
        // the uniform cap is 2 on node 1 by construction of the instance:
        // min_cost_flow overrides capacities, so express it via cap_override.
        std::map<NodeId, std::int64_t> caps{{1, 2}};
        auto paths = min_cost_flow_node_cap(g, {0, 0, 0}, 3, 100, &caps);
        REQUIRE(paths.size() == 3);
        int via_cheap = 0, via_costly = 0;
        for (const auto& p : paths) {
            if (p == std::vector<NodeId>{0, 1, 3}) ++via_cheap;
            if (p == std::vector<NodeId>{0, 2, 3}) ++via_costly;
        }
        CHECK(via_cheap == 2);
        CHECK(via_costly == 1);
    }
    SUBCASE("u = 0 is infeasible") {
        CHECK_THROWS_AS(min_cost_flow_node_cap(mk(0), {0}, 3, 0), InfeasibleError);
    }
}

TEST_CASE("min_cost_flow matches exhaustive assignment on random instances") {
    // 8-node graphs, <= 3 unit sources; oracle enumerates all per-source
    // simple paths and takes the cheapest joint assignment under the cap.
    testutil::Rng rng(11);
    for (int trial = 0; trial < 12; ++trial) {
        int n = 6 + static_cast<int>(rng.below(3));
        auto ug = testutil::random_graph(rng, n, 4);
        auto dg = to_directed(ug, 1, n - 1);
        for (int v = 0; v < n; ++v) dg.node_cost[v] = Rational(rng.below(6));
        std::int64_t u = 1 + rng.below(2);
        std::vector<NodeId> sources;
        for (int s = 0; s < 1 + rng.below(3); ++s)
            sources.push_back(static_cast<NodeId>(rng.below(n - 1)));
        NodeId sink = n - 1;

        Rational got_cost;
        bool got_feasible = true;
        try {
            auto paths = min_cost_flow_node_cap(dg, sources, sink, u);
            // Cost: per unit of flow through each node.
            got_cost = 0;
            for (const auto& p : paths)
                for (NodeId v : p) got_cost += dg.node_cost[v];
            // Node cap respected.
            std::map<NodeId, std::int64_t> load;
            for (const auto& p : paths)
                for (NodeId v : p) load[v]++;
            for (auto [v, l] : load)
                if (v != sink) CHECK(l <= u);
        } catch (const InfeasibleError&) {
            got_feasible = false;
        }

        // Oracle: enumerate joint assignments.
        auto adj = ug.adjacency();
        std::vector<std::vector<std::vector<NodeId>>> choices;
        bool any_empty = false;
        for (NodeId s : sources) {
            std::vector<std::vector<NodeId>> paths;
            std::vector<NodeId> cur{s};
            std::vector<char> used(n, 0);
            used[s] = 1;
            std::function<void(NodeId)> dfs = [&](NodeId at) {
                if (at == sink) {
                    paths.push_back(cur);
                    return;
                }
                for (auto [to, e] : adj[at]) {
                    (void)e;
                    if (used[to]) continue;
                    used[to] = 1;
                    cur.push_back(to);
                    dfs(to);
                    cur.pop_back();
                    used[to] = 0;
                }
            };
            dfs(s);
            if (paths.empty()) any_empty = true;
            choices.push_back(paths);
        }
        std::optional<Rational> best;
        if (!any_empty) {
            std::vector<size_t> idx(choices.size(), 0);
            std::function<void(size_t, std::map<NodeId, std::int64_t>&, Rational)> rec =
                [&](size_t i, std::map<NodeId, std::int64_t>& load, Rational cost) {
                    if (best && cost >= *best) return;
                    if (i == choices.size()) {
                        best = cost;
                        return;
                    }
                    for (const auto& p : choices[i]) {
                        bool ok = true;
                        for (NodeId v : p)
                            if (v != sink && load[v] + 1 > u) {
                                ok = false;
                                break;
                            }
                        if (!ok) continue;
                        Rational c2 = cost;
                        for (NodeId v : p) {
                            load[v]++;
                            c2 += dg.node_cost[v];
                        }
                        rec(i + 1, load, c2);
                        for (NodeId v : p) load[v]--;
                    }
                };
            std::map<NodeId, std::int64_t> load;
            rec(0, load, Rational(0));
        }
        if (got_feasible) {
            REQUIRE(best.has_value());
            CHECK(got_cost == *best);
        } else {
            CHECK(!best.has_value());
        }
    }
}

TEST_CASE("dgg_unsplittable examples") {
    SUBCASE("already unsplittable stays identical") {
        SplittableFlow f;
        f.sink = 3;
        f.demands.push_back({0, Rational(2), {FlowPath{{0, 1, 3}, Rational(2)}}});
        f.demands.push_back({2, Rational(1), {FlowPath{{2, 1, 3}, Rational(1)}}});
        auto out = dgg_unsplittable(f, 3);
        REQUIRE(out.routes.size() == 2);
        CHECK(out.routes[0].path == std::vector<NodeId>{0, 1, 3});
        CHECK(out.routes[1].path == std::vector<NodeId>{2, 1, 3});
    }
    SUBCASE("demand 2 split 1+1 over disjoint paths lands on one of them") {
        SplittableFlow f;
        f.sink = 3;
        f.demands.push_back({0, Rational(2),
                             {FlowPath{{0, 1, 3}, Rational(1)}, FlowPath{{0, 2, 3}, Rational(1)}}});
        auto out = dgg_unsplittable(f, 3);
        REQUIRE(out.routes.size() == 1);
        bool via1 = out.routes[0].path == std::vector<NodeId>{0, 1, 3};
        bool via2 = out.routes[0].path == std::vector<NodeId>{0, 2, 3};
        CHECK((via1 || via2));
        auto loads = out.node_loads();
        NodeId mid = via1 ? 1 : 2;
        CHECK(loads[mid] == Rational(2));
        CHECK(loads[mid] <= Rational(1) + Rational(2));  // F_v + max demand
    }
    SUBCASE("two sources sharing a middle node respect the bound") {
        // d = (1,2), middle node v=2 has F_v = 3.
        SplittableFlow f;
        f.sink = 4;
        f.demands.push_back({0, Rational(1), {FlowPath{{0, 2, 4}, Rational(1)}}});
        f.demands.push_back({1, Rational(2), {FlowPath{{1, 2, 4}, Rational(2)}}});
        auto out = dgg_unsplittable(f, 4);
        auto loads = out.node_loads();
        CHECK(loads[2] <= Rational(3) + Rational(2));
    }
}

TEST_CASE("dgg property: load bound and path support on random instances") {
    testutil::Rng rng(1234);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        int n = 5 + static_cast<int>(rng.below(10));
        auto ug = testutil::random_graph(rng, n, n / 2 + 2);
        NodeId sink = n - 1;
        std::int64_t q = 2 + rng.below(4);
        auto dg = to_directed(ug, q, sink);

        // Random multi-source splittable flow from a super-source max flow.
        int k = 1 + static_cast<int>(rng.below(3));
        std::vector<std::pair<NodeId, std::int64_t>> sources;
        for (int i = 0; i < k; ++i) {
            NodeId s = static_cast<NodeId>(rng.below(n - 1));
            sources.push_back({s, 1 + rng.below(q)});
        }
        // super-source n, gates n+1..n+k
        std::vector<std::pair<NodeId, NodeId>> arcs = dg.arcs;
        std::vector<std::int64_t> caps = dg.node_capacity;
        std::vector<Rational> costs = dg.node_cost;
        for (int i = 0; i < k; ++i) {
            NodeId gate = n + 1 + i;
            arcs.push_back({n, gate});
            arcs.push_back({gate, sources[i].first});
        }
        caps.push_back(kUnboundedCap);
        costs.push_back(Rational(0));
        for (int i = 0; i < k; ++i) {
            caps.push_back(sources[i].second);
            costs.push_back(Rational(0));
        }
        auto big = DirectedNodeCapGraph::create(n + 1 + k, arcs, caps, costs);
        auto res = max_flow_node_cap(big, n, sink);
        std::int64_t want = 0;
        for (auto [s, d] : sources) want += d;
        if (res.value != want) continue;  // infeasible draw; skip

        // Split the aggregate into per-source demands by the gate nodes.
        SplittableFlow f;
        f.sink = sink;
        std::map<NodeId, SplittableFlow::Demand> per_source;
        for (const auto& p : res.flow.demands[0].paths) {
            // path: n, gate, source, ..., sink
            REQUIRE(p.nodes.size() >= 3);
            NodeId src = p.nodes[2];
            auto& dem = per_source[p.nodes[1]];
            dem.source = src;
            dem.amount += p.amount;
            FlowPath fp;
            fp.nodes.assign(p.nodes.begin() + 2, p.nodes.end());
            fp.amount = p.amount;
            dem.paths.push_back(std::move(fp));
        }
        for (auto& [gate, dem] : per_source) f.demands.push_back(dem);

        auto loads_before = f.node_loads();
        Rational dmax = f.max_demand();
        std::set<std::pair<NodeId, NodeId>> support;
        for (const auto& dem : f.demands)
            for (const auto& p : dem.paths)
                for (size_t i = 0; i + 1 < p.nodes.size(); ++i)
                    support.insert({p.nodes[i], p.nodes[i + 1]});

        auto out = dgg_unsplittable(f, sink);
        auto loads_after = out.node_loads();
        for (const auto& [v, load] : loads_after) {
            if (v == sink) continue;
            Rational before = loads_before.count(v) ? loads_before[v] : Rational(0);
            CHECK(load <= before + dmax);
        }
        for (const auto& r : out.routes)
            for (size_t i = 0; i + 1 < r.path.size(); ++i)
                CHECK(support.count({r.path[i], r.path[i + 1]}) == 1);
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("concurrent_mcf examples") {
    SUBCASE("one demand over a single cap-1 edge") {
        ResourceGraph g;
        g.node_count = 2;
        g.resource_cap = {1.0};
        g.arcs.push_back({0, 1, {{0, 1.0}}});
        auto res = concurrent_mcf(g, {{0, 1, 1.0}}, 0.05);
        CHECK(res.throughput >= 1.0 - 0.05);
        auto loads = res.resource_loads(g);
        CHECK(loads[0] <= 1.0 + 1e-9);
    }
    SUBCASE("disconnected pair gives zero") {
        ResourceGraph g;
        g.node_count = 3;
        g.resource_cap = {1.0};
        g.arcs.push_back({0, 1, {{0, 1.0}}});
        auto res = concurrent_mcf(g, {{0, 2, 1.0}}, 0.1);
        CHECK(res.throughput == 0.0);
    }
}

TEST_CASE("concurrent_mcf on K4 matches the exact LP within eps") {
    // K4 with unit undirected edge capacities, crossing unit demands
    // (0,3) and (1,2).
    ResourceGraph g;
    g.node_count = 4;
    std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (size_t e = 0; e < edges.size(); ++e) {
        g.resource_cap.push_back(1.0);
        g.arcs.push_back({edges[e].first, edges[e].second, {{static_cast<int>(e), 1.0}}});
        g.arcs.push_back({edges[e].second, edges[e].first, {{static_cast<int>(e), 1.0}}});
    }
    std::vector<McfDemand> demands{{0, 3, 1.0}, {1, 2, 1.0}};

    // Exact optimum by path LP over all simple paths.
    LinearProgram lp;
    int lambda = lp.add_variable(Rational(1));
    std::vector<std::vector<std::pair<int, Rational>>> edge_terms(edges.size());
    std::vector<std::vector<std::pair<int, Rational>>> pair_terms(demands.size());
    auto edge_index = [&](NodeId a, NodeId b) -> int {
        for (size_t e = 0; e < edges.size(); ++e)
            if ((edges[e].first == a && edges[e].second == b) ||
                (edges[e].first == b && edges[e].second == a))
                return static_cast<int>(e);
        return -1;
    };
    for (size_t i = 0; i < demands.size(); ++i) {
        std::vector<std::vector<NodeId>> paths;
        std::vector<NodeId> cur{demands[i].source};
        std::vector<char> used(4, 0);
        used[demands[i].source] = 1;
        std::function<void(NodeId)> dfs = [&](NodeId at) {
            if (at == demands[i].sink) {
                paths.push_back(cur);
                return;
            }
            for (NodeId to = 0; to < 4; ++to) {
                if (used[to] || edge_index(at, to) < 0) continue;
                used[to] = 1;
                cur.push_back(to);
                dfs(to);
                cur.pop_back();
                used[to] = 0;
            }
        };
        dfs(demands[i].source);
        for (const auto& p : paths) {
            int var = lp.add_variable(Rational(0));
            pair_terms[i].push_back({var, Rational(1)});
            for (size_t j = 0; j + 1 < p.size(); ++j)
                edge_terms[edge_index(p[j], p[j + 1])].push_back({var, Rational(1)});
        }
    }
    for (auto& terms : pair_terms) {
        for (auto& [v, c] : terms) c = -c;
        terms.push_back({lambda, Rational(1)});
    }
    for (auto& terms : pair_terms) lp.add_constraint(terms, Rational(0));
    for (auto& terms : edge_terms) lp.add_constraint(terms, Rational(1));
    auto exact = lp_maximize(lp);
    REQUIRE(exact.has_value());
    double lambda_star = to_double(exact->value);

    auto res = concurrent_mcf(g, demands, 0.05);
    CHECK(res.throughput >= (1.0 - 0.05) * lambda_star);
    CHECK(res.throughput <= lambda_star + 1e-9);
    auto loads = res.resource_loads(g);
    for (double l : loads) CHECK(l <= 1.0 + 1e-9);
}
