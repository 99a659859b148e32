#include "doctest.h"

#include "ncnd/oracle.hpp"
#include "ncnd/steiner.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace ncnd;

TEST_CASE("pnwst: root is a terminal, target 1") {
    auto g = UndirectedMultigraph::create({Rational(7), Rational(1)}, {{0, 1}});
    PnwstQuery q;
    q.graph = &g;
    q.beta = {Rational(7), Rational(1)};
    q.root = 0;
    q.is_terminal = {1, 0};
    q.target = 1;
    auto res = pnwst_approx(q);
    CHECK(res.tree == std::vector<NodeId>{0});
    CHECK(res.cost == Rational(7));
}

TEST_CASE("pnwst: star with free leaves") {
    // center 0 with beta 9, three zero-beta terminal leaves; target 2.
    auto g = UndirectedMultigraph::create(
        {Rational(9), Rational(0), Rational(0), Rational(0)}, {{0, 1}, {0, 2}, {0, 3}});
    PnwstQuery q;
    q.graph = &g;
    q.beta = g.node_cost;
    q.root = 0;
    q.is_terminal = {0, 1, 1, 1};
    q.target = 2;
    auto res = pnwst_approx(q);
    CHECK(res.cost == Rational(9));
    CHECK(res.terminals_covered >= 2);
    CHECK(res.tree.size() == 3);  // center + two leaves
}

TEST_CASE("pnwst: picks the branch that meets the quota") {
    // root 0; branch A: node 1 (beta 4) with 1 terminal (node 2);
    // branch B: node 3 (beta 5) with 2 terminals (nodes 4, 5). target 2.
    auto g = UndirectedMultigraph::create(
        {Rational(0), Rational(4), Rational(0), Rational(5), Rational(0), Rational(0)},
        {{0, 1}, {1, 2}, {0, 3}, {3, 4}, {3, 5}});
    PnwstQuery q;
    q.graph = &g;
    q.beta = g.node_cost;
    q.root = 0;
    q.is_terminal = {0, 0, 1, 0, 1, 1};
    q.target = 2;
    auto res = pnwst_approx(q);
    CHECK(res.cost == Rational(5));
    CHECK(res.terminals_covered == 2);
}

TEST_CASE("pnwst: infeasible when the target is unreachable") {
    auto g = UndirectedMultigraph::create({Rational(1), Rational(1)}, {});
    PnwstQuery q;
    q.graph = &g;
    q.beta = g.node_cost;
    q.root = 0;
    q.is_terminal = {0, 1};
    q.target = 1;
    CHECK_THROWS_AS(pnwst_approx(q), InfeasibleError);
}

TEST_CASE("pnwst empirical ratio <= 2 ln n * OPT on small random graphs") {
    testutil::Rng rng(99);
    int tested = 0;
    for (int trial = 0; trial < 40; ++trial) {
        int n = 5 + static_cast<int>(rng.below(7));  // <= 11
        auto g = testutil::random_graph(rng, n, 3);
        PnwstQuery q;
        q.graph = &g;
        q.beta = g.node_cost;
        q.root = 0;
        q.is_terminal.assign(n, 0);
        int terms = 0;
        for (int v = 1; v < n; ++v)
            if (rng.below(2)) {
                q.is_terminal[v] = 1;
                ++terms;
            }
        if (terms == 0) continue;
        q.target = 1 + rng.below(terms);
        auto exact = exact_pnwst(q);
        PnwstResult approx;
        try {
            approx = pnwst_approx(q);
        } catch (const InfeasibleError&) {
            CHECK(!exact.has_value());
            continue;
        }
        REQUIRE(exact.has_value());
        // Output is connected, contains the root and meets the target.
        CHECK(approx.terminals_covered >= q.target);
        CHECK(std::binary_search(approx.tree.begin(), approx.tree.end(), q.root));
        double bound = 2.0 * std::log(static_cast<double>(n));
        if (exact->cost == 0)
            CHECK(approx.cost == 0);
        else
            CHECK(to_double(approx.cost) <= bound * to_double(exact->cost) + 1e-9);
        ++tested;
    }
    CHECK(tested >= 20);
}

TEST_CASE("max_density_tree: all terminals covered is infeasible") {
    auto g = UndirectedMultigraph::create({Rational(1), Rational(0)}, {{0, 1}});
    auto inst = SsncInstance::create(g, 1, {{0, 1}}, 1);
    auto w = WElements::build(inst);
    std::vector<char> covered(w.count(), 1);
    CHECK_THROWS_AS(max_density_tree(inst, w, g.node_cost, covered), InfeasibleError);
}

TEST_CASE("max_density_tree: single terminal of demand q adjacent to the sink") {
    // terminal node 0 (beta 3), sink node 1 (beta 0); demand q = 2.
    auto g = UndirectedMultigraph::create({Rational(3), Rational(0)}, {{0, 1}});
    auto inst = SsncInstance::create(g, 1, {{0, 2}}, 2);
    auto w = WElements::build(inst);
    std::vector<char> covered(w.count(), 0);
    auto cand = max_density_tree(inst, w, g.node_cost, covered);
    CHECK(cand.covered.size() == 2);
    CHECK(cand.density == Rational(3) / Rational(2));
    // Both families can realize this density; the tree must contain node 0.
    CHECK(std::binary_search(cand.tree.begin(), cand.tree.end(), 0));
}

TEST_CASE("max_density_tree tracks the exact minimum on a 5-node path") {
    // path 0-1-2-3-4, q=2, unit demands at both ends, sink in the middle.
    auto g = UndirectedMultigraph::create(
        {Rational(0), Rational(2), Rational(0), Rational(5), Rational(0)},
        {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    auto inst = SsncInstance::create(g, 2, {{0, 1}, {4, 1}}, 2);
    auto w = WElements::build(inst);
    std::vector<char> covered(w.count(), 0);
    auto cand = max_density_tree(inst, w, g.node_cost, covered);
    auto exact = exact_density(inst, w, g.node_cost, covered);
    REQUIRE(exact.has_value());
    CHECK(cand.density >= exact->density);
    // Within the empirical pnwst factor (2 ln n here).
    double bound = 2.0 * std::log(5.0);
    CHECK(to_double(cand.density) <= std::max(1.0, bound) * to_double(exact->density) + 1e-9);
}

TEST_CASE("max_density_tree stays within the ratio on random instances") {
    testutil::Rng rng(31);
    int tested = 0;
    for (int trial = 0; trial < 25; ++trial) {
        int n = 5 + static_cast<int>(rng.below(5));
        auto g = testutil::random_graph(rng, n, 3);
        std::int64_t q = 1 + rng.below(3);
        NodeId sink = n - 1;
        std::vector<std::pair<NodeId, std::int64_t>> sources;
        for (int v = 0; v < n - 1; ++v)
            if (rng.below(3) == 0) sources.push_back({v, 1 + rng.below(q)});
        if (sources.empty()) continue;
        auto inst = SsncInstance::create(g, sink, sources, q);
        auto w = WElements::build(inst);
        std::vector<char> covered(w.count(), 0);
        for (int e = 0; e < w.count(); ++e) covered[e] = rng.below(4) == 0;
        bool any = false;
        for (int e = 0; e < w.count(); ++e)
            if (!covered[e]) any = true;
        if (!any) continue;

        std::optional<DensityCandidate> cand;
        try {
            cand = max_density_tree(inst, w, g.node_cost, covered);
        } catch (const InfeasibleError&) {
        }
        auto exact = exact_density(inst, w, g.node_cost, covered);
        if (!cand) {
            // The implementation's sweep is a subset of the oracle family;
            // it may miss, but only when the exact family is thin too.
            continue;
        }
        REQUIRE(exact.has_value());
        CHECK(cand->density >= exact->density);
        double bound = std::max(1.0, 2.0 * std::log(static_cast<double>(n)));
        if (exact->density == 0)
            CHECK(cand->density == 0);
        else
            CHECK(to_double(cand->density) <= bound * to_double(exact->density) + 1e-9);
        ++tested;
    }
    CHECK(tested >= 10);
}

TEST_CASE("exact_pnwst self-consistency across enumeration orders") {
    testutil::Rng rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 5 + static_cast<int>(rng.below(4));
        auto g = testutil::random_graph(rng, n, 2);
        PnwstQuery q;
        q.graph = &g;
        q.beta = g.node_cost;
        q.root = 0;
        q.is_terminal.assign(n, 0);
        for (int v = 1; v < n; ++v) q.is_terminal[v] = rng.below(2);
        q.target = 1;
        auto a = exact_pnwst(q, {}, EnumOrder::CostAscending);
        auto b = exact_pnwst(q, {}, EnumOrder::SizeAscending);
        REQUIRE(a.has_value() == b.has_value());
        if (a) CHECK(a->cost == b->cost);
    }
}
