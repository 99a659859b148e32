#include "doctest.h"

#include "ncnd/flow.hpp"
#include "ncnd/graph.hpp"
#include "ncnd/instances.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <set>

using namespace ncnd;

TEST_CASE("split_transform: single node") {
    auto g = DirectedNodeCapGraph::create(1, {}, {5}, {Rational(0)});
    auto [arcg, map] = split_transform(g);
    CHECK(arcg.node_count == 2);
    REQUIRE(arcg.arcs.size() == 1);
    CHECK(arcg.arcs[0].from == map.in(0));
    CHECK(arcg.arcs[0].to == map.out(0));
    CHECK(arcg.arcs[0].cap == 5);
}

TEST_CASE("split_transform: path gadget and its max flow") {
    // a -> b -> c with caps (1,2,3): 6 nodes, 5 arcs, max a->c flow 1.
    auto g = DirectedNodeCapGraph::create(3, {{0, 1}, {1, 2}}, {1, 2, 3},
                                          {Rational(0), Rational(0), Rational(0)});
    auto [arcg, map] = split_transform(g);
    CHECK(arcg.node_count == 6);
    CHECK(arcg.arcs.size() == 5);
    // The map is invertible.
    for (NodeId v = 0; v < 3; ++v) {
        CHECK(map.original(map.in(v)) == v);
        CHECK(map.original(map.out(v)) == v);
    }
    auto res = max_flow_node_cap(g, 0, 2);
    CHECK(res.value == 1);
}

TEST_CASE("split_transform: zero-capacity node carries no flow") {
    auto g = DirectedNodeCapGraph::create(3, {{0, 1}, {1, 2}}, {2, 0, kUnboundedCap},
                                          {Rational(0), Rational(0), Rational(0)});
    auto res = max_flow_node_cap(g, 0, 2);
    CHECK(res.value == 0);
}

TEST_CASE("induced_subgraph basics") {
    auto g = UndirectedMultigraph::create(
        {Rational(1), Rational(2), Rational(3)}, {{0, 1}, {1, 2}, {0, 2}});

    SUBCASE("keep everything: isomorphic") {
        auto sub = induced_subgraph(g, {0, 1, 2});
        CHECK(sub.graph.node_count() == 3);
        CHECK(sub.graph.edge_count() == 3);
    }
    SUBCASE("triangle down to an edge") {
        auto sub = induced_subgraph(g, {0, 2});
        CHECK(sub.graph.node_count() == 2);
        REQUIRE(sub.graph.edge_count() == 1);
        CHECK(sub.graph.node_cost[0] == Rational(1));
        CHECK(sub.graph.node_cost[1] == Rational(3));
    }
}

TEST_CASE("induced_subgraph: random keep equals direct edge filter; idempotent") {
    testutil::Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = testutil::random_graph(rng, 8, 6);
        std::vector<NodeId> keep;
        for (int v = 0; v < 8; ++v)
            if (rng.below(2)) keep.push_back(v);
        if (keep.empty()) keep.push_back(0);
        auto sub = induced_subgraph(g, keep);
        // Direct filter oracle.
        std::set<NodeId> ks(keep.begin(), keep.end());
        size_t expected = 0;
        for (auto [u, v] : g.edges)
            if (ks.count(u) && ks.count(v)) ++expected;
        CHECK(sub.graph.edges.size() == expected);
        // Idempotence: keeping everything again is an isomorphic graph.
        std::vector<NodeId> all(sub.graph.node_count());
        for (int i = 0; i < sub.graph.node_count(); ++i) all[i] = i;
        auto sub2 = induced_subgraph(sub.graph, all);
        CHECK(sub2.graph.node_count() == sub.graph.node_count());
        CHECK(sub2.graph.edges == sub.graph.edges);
        CHECK(sub2.graph.node_cost == sub.graph.node_cost);
    }
}

TEST_CASE("self-loops are rejected") {
    CHECK_THROWS_AS(UndirectedMultigraph::create({Rational(1)}, {{0, 0}}),
                    std::invalid_argument);
}

TEST_CASE("validate_instance: SSNC diagnostics") {
    auto g = UndirectedMultigraph::create(
        {Rational(1), Rational(1), Rational(1), Rational(1)}, {{0, 1}, {1, 2}});
    SUBCASE("demand exceeds capacity") {
        auto inst = SsncInstance::create(g, 2, {{0, 3}}, 2);
        auto diag = validate_instance(inst);
        REQUIRE(diag.issues.size() == 1);
        CHECK(diag.issues[0].find("demand exceeds capacity") != std::string::npos);
    }
    SUBCASE("disconnected source") {
        auto inst = SsncInstance::create(g, 2, {{3, 1}}, 2);
        auto diag = validate_instance(inst);
        REQUIRE(diag.issues.size() == 1);
        CHECK(diag.issues[0].find("no path") != std::string::npos);
    }
    SUBCASE("clean instance passes") {
        auto inst = SsncInstance::create(g, 2, {{0, 2}, {1, 1}}, 2);
        CHECK(validate_instance(inst).ok());
    }
}

TEST_CASE("McncInstance rewrites shared terminals with pendant dummies") {
    auto g = UndirectedMultigraph::create(
        {Rational(1), Rational(1), Rational(1)}, {{0, 1}, {1, 2}});
    auto inst = McncInstance::create(g, {{0, 2, 1}, {0, 1, 1}}, 2);
    CHECK(inst.graph.node_count() == 4);  // one dummy for the second use of node 0
    REQUIRE(inst.dummy_of.size() == 1);
    CHECK(inst.dummy_of[0].second == 0);
    CHECK(inst.graph.node_cost[inst.dummy_of[0].first] == Rational(0));
    CHECK(validate_instance(inst).ok());
    CHECK(inst.original_of(inst.dummy_of[0].first) == 0);
}

TEST_CASE("split_transform round-trip: lifted loads respect capacities") {
    testutil::Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 4 + static_cast<int>(rng.below(6));
        auto ug = testutil::random_graph(rng, n, n);
        auto dg = to_directed(ug, 1 + rng.below(4), /*unbounded_node=*/n - 1);
        auto res = max_flow_node_cap(dg, 0, n - 1);
        auto loads = res.flow.node_loads();
        for (const auto& [v, load] : loads) {
            if (v == n - 1) continue;
            CHECK(load <= Rational(dg.node_capacity[v]));
        }
        // Flow value equals the sum over paths.
        Rational total = 0;
        for (const auto& d : res.flow.demands)
            for (const auto& p : d.paths) total += p.amount;
        CHECK(total == Rational(res.value));
    }
}
