#include "ncnd/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ncnd {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg, const std::string& path) {
    throw ParseError(msg, path);
}

const Json& need(const Json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "'", path);
    return *it;
}

void check_keys(const Json& obj, const std::set<std::string>& allowed,
                const std::string& path, const ParseOptions& opts,
                std::vector<std::string>& warnings) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.count(it.key())) continue;
        if (opts.strict)
            fail("unknown field '" + it.key() + "'", path);
        else
            warnings.push_back("ignored unknown field '" + it.key() + "' at " + path);
    }
}

struct SplitMix {
    std::uint64_t state;
    explicit SplitMix(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::int64_t below(std::int64_t n) { return static_cast<std::int64_t>(next() % n); }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::int64_t param_int(const std::map<std::string, std::string>& params, const std::string& key,
                       std::int64_t fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad integer parameter " + key + "=" + it->second);
    }
}

double param_double(const std::map<std::string, std::string>& params, const std::string& key,
                    double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad numeric parameter " + key + "=" + it->second);
    }
}

}  // namespace

SsncInstance InstanceFile::to_ssnc() const {
    if (kind != "ssnc") throw std::invalid_argument("instance kind is not ssnc");
    return SsncInstance::create(graph, sink, demands, capacity);
}

McncInstance InstanceFile::to_mcnc() const {
    if (kind != "mcnc") throw std::invalid_argument("instance kind is not mcnc");
    return McncInstance::create(graph, pairs, capacity);
}

EevrpInstance InstanceFile::to_eevrp() const {
    if (kind != "eevrp") throw std::invalid_argument("instance kind is not eevrp");
    return EevrpInstance::create(graph, pairs, sigma, alpha);
}

ParseResult parse_instance(const std::string& text, const ParseOptions& opts) {
    ParseResult result;
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what(), "");
    }
    if (!root.is_object()) fail("top level must be an object", "");
    check_keys(root,
               {"format_version", "kind", "graph", "parameters", "sink", "demands", "pairs",
                "optimum"},
               "$", opts, result.warnings);

    InstanceFile& f = result.file;
    f.format_version = need(root, "format_version", "$").get<int>();
    if (f.format_version != 1) fail("unsupported format_version", "$.format_version");
    f.kind = need(root, "kind", "$").get<std::string>();
    if (f.kind != "ssnc" && f.kind != "mcnc" && f.kind != "eevrp")
        fail("kind must be ssnc, mcnc or eevrp", "$.kind");

    const Json& jg = need(root, "graph", "$");
    check_keys(jg, {"nodes", "edges"}, "$.graph", opts, result.warnings);
    std::vector<Rational> costs;
    std::vector<std::string> labels;
    const Json& jn = need(jg, "nodes", "$.graph");
    if (!jn.is_array() || jn.empty()) fail("graph.nodes must be a non-empty array", "$.graph.nodes");
    int idx = 0;
    for (const auto& node : jn) {
        std::string path = "$.graph.nodes[" + std::to_string(idx) + "]";
        check_keys(node, {"cost", "label"}, path, opts, result.warnings);
        try {
            costs.push_back(parse_rational(need(node, "cost", path).get<std::string>()));
        } catch (const std::invalid_argument& e) {
            fail(e.what(), path + ".cost");
        }
        labels.push_back(node.contains("label") ? node["label"].get<std::string>()
                                                : "v" + std::to_string(idx));
        ++idx;
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    idx = 0;
    for (const auto& e : need(jg, "edges", "$.graph")) {
        std::string path = "$.graph.edges[" + std::to_string(idx++) + "]";
        if (!e.is_array() || e.size() != 2) fail("edge must be a [u, v] pair", path);
        edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>()});
    }
    try {
        f.graph = UndirectedMultigraph::create(costs, labels, edges);
    } catch (const std::invalid_argument& e) {
        fail(e.what(), "$.graph");
    }

    const Json& jp = need(root, "parameters", "$");
    if (f.kind == "eevrp") {
        check_keys(jp, {"sigma", "alpha"}, "$.parameters", opts, result.warnings);
        f.sigma = need(jp, "sigma", "$.parameters").get<double>();
        f.alpha = need(jp, "alpha", "$.parameters").get<double>();
    } else {
        check_keys(jp, {"q"}, "$.parameters", opts, result.warnings);
        f.capacity = need(jp, "q", "$.parameters").get<std::int64_t>();
    }

    if (f.kind == "ssnc") {
        f.sink = need(root, "sink", "$").get<NodeId>();
        idx = 0;
        for (const auto& d : need(root, "demands", "$")) {
            std::string path = "$.demands[" + std::to_string(idx++) + "]";
            check_keys(d, {"source", "demand"}, path, opts, result.warnings);
            f.demands.push_back({need(d, "source", path).get<NodeId>(),
                                 need(d, "demand", path).get<std::int64_t>()});
        }
    } else {
        idx = 0;
        for (const auto& p : need(root, "pairs", "$")) {
            std::string path = "$.pairs[" + std::to_string(idx++) + "]";
            if (!p.is_array() || p.size() != 2) fail("pair must be a [s, t] pair", path);
            f.pairs.push_back({p[0].get<NodeId>(), p[1].get<NodeId>(), 1});
        }
    }

    if (root.contains("optimum")) {
        const Json& jo = root["optimum"];
        check_keys(jo, {"cost", "nodes", "note"}, "$.optimum", opts, result.warnings);
        FixtureOptimum opt;
        try {
            opt.cost = parse_rational(need(jo, "cost", "$.optimum").get<std::string>());
        } catch (const std::invalid_argument& e) {
            fail(e.what(), "$.optimum.cost");
        }
        if (jo.contains("nodes"))
            for (const auto& v : jo["nodes"]) opt.nodes.push_back(v.get<NodeId>());
        if (jo.contains("note")) opt.note = jo["note"].get<std::string>();
        f.optimum = std::move(opt);
    }

    // Construction-level validation so malformed instances fail at parse time.
    try {
        if (f.kind == "ssnc") (void)f.to_ssnc();
        if (f.kind == "mcnc") (void)f.to_mcnc();
        if (f.kind == "eevrp") (void)f.to_eevrp();
    } catch (const std::invalid_argument& e) {
        fail(e.what(), "$");
    }
    return result;
}

std::string serialize_instance(const InstanceFile& f) {
    Json root;
    root["format_version"] = f.format_version;
    root["kind"] = f.kind;
    Json nodes = Json::array();
    for (int v = 0; v < f.graph.node_count(); ++v) {
        Json node;
        node["cost"] = format_rational(f.graph.node_cost[v]);
        node["label"] = f.graph.labels[v];
        nodes.push_back(std::move(node));
    }
    Json edges = Json::array();
    for (auto [u, v] : f.graph.edges) edges.push_back(Json::array({u, v}));
    root["graph"] = Json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    if (f.kind == "eevrp")
        root["parameters"] = Json{{"sigma", f.sigma}, {"alpha", f.alpha}};
    else
        root["parameters"] = Json{{"q", f.capacity}};
    if (f.kind == "ssnc") {
        root["sink"] = f.sink;
        Json demands = Json::array();
        for (auto [s, d] : f.demands)
            demands.push_back(Json{{"source", s}, {"demand", d}});
        root["demands"] = std::move(demands);
    } else {
        Json pairs = Json::array();
        for (const auto& p : f.pairs) pairs.push_back(Json::array({p.source, p.sink}));
        root["pairs"] = std::move(pairs);
    }
    if (f.optimum) {
        Json jo;
        jo["cost"] = format_rational(f.optimum->cost);
        if (!f.optimum->nodes.empty()) jo["nodes"] = f.optimum->nodes;
        if (!f.optimum->note.empty()) jo["note"] = f.optimum->note;
        root["optimum"] = std::move(jo);
    }
    return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------
InstanceFile generate(const std::string& kind,
                      const std::map<std::string, std::string>& params, std::uint64_t seed) {
    SplitMix rng(seed ^ 0xa5a5a5a5ull);
    InstanceFile f;
    f.format_version = 1;

    auto random_costs = [&](int n, std::int64_t max_cost) {
        std::vector<Rational> costs(n);
        for (int v = 0; v < n; ++v) costs[v] = Rational(rng.below(max_cost + 1));
        return costs;
    };

    if (kind == "random-geometric") {
        const int n = static_cast<int>(param_int(params, "n", 10));
        const double radius = param_double(params, "radius", 0.6);
        const std::int64_t q = param_int(params, "q", 2);
        const int k = static_cast<int>(param_int(params, "k", 3));
        const std::string problem = params.count("problem") ? params.at("problem") : "ssnc";
        if (n < 2) throw std::invalid_argument("n must be at least 2");
        std::vector<std::pair<double, double>> pts(n);
        for (auto& [x, y] : pts) {
            x = rng.unit();
            y = rng.unit();
        }
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) {
                double dx = pts[u].first - pts[v].first, dy = pts[u].second - pts[v].second;
                if (std::sqrt(dx * dx + dy * dy) <= radius) edges.push_back({u, v});
            }
        // Connect stragglers to keep instances feasible.
        for (int v = 1; v < n; ++v) {
            bool connected = false;
            for (auto [a, b] : edges)
                if (a == v || b == v) connected = true;
            if (!connected) edges.push_back({static_cast<NodeId>(rng.below(v)), v});
        }
        f.graph = UndirectedMultigraph::create(random_costs(n, 9), edges);
        // Repair connectivity globally (geometric graphs can split).
        while (true) {
            auto reach = f.graph.reachable_from(0);
            int missing = -1;
            for (int v = 0; v < n; ++v)
                if (!reach[v]) missing = v;
            if (missing < 0) break;
            auto es = f.graph.edges;
            es.push_back({0, missing});
            f.graph = UndirectedMultigraph::create(f.graph.node_cost, f.graph.labels, es);
        }
        f.capacity = q;
        if (problem == "mcnc") {
            f.kind = "mcnc";
            std::set<NodeId> used;
            for (int i = 0; i < k && static_cast<int>(used.size()) + 2 <= n; ++i) {
                NodeId a = static_cast<NodeId>(rng.below(n));
                NodeId b = static_cast<NodeId>(rng.below(n));
                if (a == b || used.count(a) || used.count(b)) {
                    --i;
                    continue;
                }
                used.insert(a);
                used.insert(b);
                f.pairs.push_back({a, b, 1});
            }
            if (f.pairs.empty()) f.pairs.push_back({0, static_cast<NodeId>(n - 1), 1});
        } else {
            f.kind = "ssnc";
            f.sink = static_cast<NodeId>(n - 1);
            std::set<NodeId> used{f.sink};
            for (int i = 0; i < k; ++i) {
                NodeId s = static_cast<NodeId>(rng.below(n - 1));
                if (used.count(s)) continue;
                used.insert(s);
                f.demands.push_back({s, 1 + rng.below(q)});
            }
            if (f.demands.empty()) f.demands.push_back({0, 1});
        }
        return f;
    }

    if (kind == "grid") {
        const int rows = static_cast<int>(param_int(params, "rows", 3));
        const int cols = static_cast<int>(param_int(params, "cols", 3));
        const std::int64_t q = param_int(params, "q", 2);
        const int n = rows * cols;
        std::vector<std::pair<NodeId, NodeId>> edges;
        auto at = [&](int r, int c) { return static_cast<NodeId>(r * cols + c); };
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                if (c + 1 < cols) edges.push_back({at(r, c), at(r, c + 1)});
                if (r + 1 < rows) edges.push_back({at(r, c), at(r + 1, c)});
            }
        f.graph = UndirectedMultigraph::create(random_costs(n, 9), edges);
        f.kind = "ssnc";
        f.capacity = q;
        f.sink = at(rows - 1, cols - 1);
        f.demands.push_back({at(0, 0), std::max<std::int64_t>(1, q / 2)});
        if (n > 2) f.demands.push_back({at(0, cols - 1), 1});
        return f;
    }

    if (kind == "star-pathological") {
        const int n = static_cast<int>(param_int(params, "n", 10));
        const std::int64_t q = param_int(params, "q", 2);
        if (n < 3) throw std::invalid_argument("star needs at least 3 nodes");
        std::vector<Rational> costs(n, Rational(1));
        costs[0] = Rational(param_int(params, "hub_cost", 5));
        costs[n - 1] = Rational(0);
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (int v = 1; v < n; ++v) edges.push_back({0, v});
        f.graph = UndirectedMultigraph::create(costs, edges);
        f.kind = "ssnc";
        f.capacity = q;
        f.sink = static_cast<NodeId>(n - 1);
        for (int v = 1; v + 1 < n; ++v) f.demands.push_back({v, 1});
        return f;
    }

    if (kind == "binary-merge") {
        // Complete binary merge tree: 2^depth unit sources, pairwise joins,
        // then a trunk into the sink. Drives the Cluster recursion traces.
        const int depth = static_cast<int>(param_int(params, "depth", 3));
        const std::int64_t q = param_int(params, "q", 1 << depth);
        if (depth < 1 || depth > 8) throw std::invalid_argument("depth must be in [1, 8]");
        const int leaves = 1 << depth;
        int total = 2 * leaves;  // leaves + internal + sink
        std::vector<Rational> costs(total, Rational(1));
        costs[total - 1] = Rational(0);
        std::vector<std::pair<NodeId, NodeId>> edges;
        // Heap layout: internal nodes leaves..2*leaves-2 reversed; simplest:
        // node ids 0..leaves-1 are sources; build joins level by level.
        int next = leaves;
        std::vector<int> level(leaves);
        for (int i = 0; i < leaves; ++i) level[i] = i;
        while (level.size() > 1) {
            std::vector<int> up;
            for (size_t i = 0; i + 1 < level.size(); i += 2) {
                int parent = next++;
                edges.push_back({level[i], parent});
                edges.push_back({level[i + 1], parent});
                up.push_back(parent);
            }
            level = std::move(up);
        }
        edges.push_back({level[0], total - 1});
        f.graph = UndirectedMultigraph::create(costs, edges);
        f.kind = "ssnc";
        f.capacity = q;
        f.sink = static_cast<NodeId>(total - 1);
        for (int v = 0; v < leaves; ++v) f.demands.push_back({v, 1});
        return f;
    }

    if (kind == "dumbbell") {
        // Two terminal groups with dense internal demand and one crossing
        // pair; exercises the min-cut decomposition.
        const int side = static_cast<int>(param_int(params, "side", 4));
        const std::int64_t q = param_int(params, "q", 2);
        const int n = 2 * side + 2;  // terminals plus two connector hubs
        std::vector<Rational> costs(n, Rational(1));
        std::vector<std::pair<NodeId, NodeId>> edges;
        NodeId hub_a = static_cast<NodeId>(n - 2), hub_b = static_cast<NodeId>(n - 1);
        for (int v = 0; v < side; ++v) edges.push_back({static_cast<NodeId>(v), hub_a});
        for (int v = side; v < 2 * side; ++v) edges.push_back({static_cast<NodeId>(v), hub_b});
        edges.push_back({hub_a, hub_b});
        f.graph = UndirectedMultigraph::create(costs, edges);
        f.kind = "mcnc";
        f.capacity = q;
        for (int v = 0; v + 1 < side; v += 2)
            f.pairs.push_back({static_cast<NodeId>(v), static_cast<NodeId>(v + 1), 1});
        for (int v = side; v + 1 < 2 * side; v += 2)
            f.pairs.push_back({static_cast<NodeId>(v), static_cast<NodeId>(v + 1), 1});
        f.pairs.push_back({0, static_cast<NodeId>(side), 1});
        return f;
    }

    throw std::invalid_argument("unknown generator kind '" + kind + "'");
}

}  // namespace ncnd
