#pragma once

#include "ncnd/graph.hpp"
#include "ncnd/instances.hpp"

#include <cstdint>
#include <vector>

namespace ncnd::testutil {

/// Tiny deterministic generator for tests (SplitMix64); independent of the
/// library RNG so fixtures never shift under solver changes.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::int64_t below(std::int64_t n) { return static_cast<std::int64_t>(next() % n); }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

/// Connected random multigraph: a random spanning tree plus extra edges.
inline UndirectedMultigraph random_graph(Rng& rng, int n, int extra_edges,
                                         std::int64_t max_cost = 9) {
    std::vector<Rational> cost(n);
    for (int v = 0; v < n; ++v) cost[v] = Rational(rng.below(max_cost + 1));
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int v = 1; v < n; ++v) edges.push_back({static_cast<NodeId>(rng.below(v)), v});
    for (int e = 0; e < extra_edges; ++e) {
        NodeId u = static_cast<NodeId>(rng.below(n));
        NodeId v = static_cast<NodeId>(rng.below(n));
        if (u == v) continue;
        edges.push_back({u, v});
    }
    return UndirectedMultigraph::create(cost, edges);
}

}  // namespace ncnd::testutil
