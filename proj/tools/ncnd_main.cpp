// Command-line surface: solve-ssnc, solve-mcnc, solve-energy, oracle, gen,
// bench. Exit codes: 0 ok, 2 infeasible, 3 stall, 4 parse error.

#include "ncnd/bench.hpp"
#include "ncnd/energy.hpp"
#include "ncnd/io.hpp"
#include "ncnd/mcnc.hpp"
#include "ncnd/oracle.hpp"
#include "ncnd/ssnc.hpp"

#include <CLI11.hpp>
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using ncnd::Rational;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitStall = 3;
constexpr int kExitParse = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ncnd::ParseError("cannot open file " + path, "");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file " + path);
    out << text;
}

struct CommonFlags {
    std::uint64_t seed = 1;
    std::string knobs_file;
    std::string ledger_path;
    bool strict = true;
};

struct Knobs {
    ncnd::SsncKnobs ssnc;
    ncnd::McncKnobs mcnc;
};

Knobs load_knobs(const std::string& path) {
    Knobs k;
    k.mcnc.ssnc = k.ssnc;
    if (path.empty()) return k;
    auto j = nlohmann::json::parse(read_file(path));
    if (j.contains("u_multiplier")) k.ssnc.u_multiplier = j["u_multiplier"].get<std::int64_t>();
    if (j.contains("max_u_doublings")) k.ssnc.max_u_doublings = j["max_u_doublings"].get<int>();
    if (j.contains("llsc_hard_cap_factor"))
        k.ssnc.llsc.hard_cap_factor = j["llsc_hard_cap_factor"].get<std::int64_t>();
    if (j.contains("c_h")) k.mcnc.c_h = j["c_h"].get<double>();
    if (j.contains("c_x")) k.mcnc.c_x = j["c_x"].get<double>();
    if (j.contains("c_outer")) k.mcnc.c_outer = j["c_outer"].get<int>();
    if (j.contains("eps")) k.mcnc.eps = j["eps"].get<double>();
    if (j.contains("beta_init")) k.mcnc.beta_init = j["beta_init"].get<double>();
    k.mcnc.ssnc = k.ssnc;
    return k;
}

void dump_ledger(const ncnd::AuditLedger& ledger, const std::string& path) {
    if (path.empty()) return;
    write_file(path, ledger.to_jsonl());
}

ncnd::ParseResult parse_file(const std::string& path, bool strict) {
    ncnd::ParseOptions opts;
    opts.strict = strict;
    auto res = ncnd::parse_instance(read_file(path), opts);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    return res;
}

nlohmann::ordered_json routing_json(
    const std::vector<std::pair<std::vector<ncnd::NodeId>, double>>& paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [path, fraction] : paths) {
        nlohmann::ordered_json entry;
        entry["fraction"] = fraction;
        entry["path"] = path;
        arr.push_back(std::move(entry));
    }
    return arr;
}

int run_solve_ssnc(const std::string& file, const CommonFlags& flags) {
    auto parsed = parse_file(file, flags.strict);
    auto inst = parsed.file.to_ssnc();
    auto knobs = load_knobs(flags.knobs_file);
    auto sol = ncnd::solve_ssnc(inst, knobs.ssnc);
    dump_ledger(sol.ledger, flags.ledger_path);
    nlohmann::ordered_json out;
    out["cost"] = ncnd::format_rational(sol.cost);
    out["congestion_over_q"] = ncnd::format_rational(sol.congestion);
    out["u_used"] = sol.u_used;
    out["nodes"] = sol.nodes;
    nlohmann::ordered_json routes = nlohmann::ordered_json::array();
    for (const auto& r : sol.routing) {
        nlohmann::ordered_json jr;
        jr["source"] = inst.sources[r.source_idx].first;
        jr["demand"] = inst.sources[r.source_idx].second;
        jr["aggregation"] = r.aggregation;
        jr["trunk"] = r.trunk;
        routes.push_back(std::move(jr));
    }
    out["routing"] = std::move(routes);
    out["audits_ok"] = sol.ledger.all_ok();
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int run_solve_mcnc(const std::string& file, const CommonFlags& flags) {
    auto parsed = parse_file(file, flags.strict);
    auto inst = parsed.file.to_mcnc();
    auto knobs = load_knobs(flags.knobs_file);
    auto sol = ncnd::solve_mcnc(inst, knobs.mcnc, flags.seed);
    dump_ledger(sol.ledger, flags.ledger_path);
    nlohmann::ordered_json out;
    out["cost"] = ncnd::format_rational(sol.cost);
    out["congestion_over_q"] = sol.congestion_over_q;
    out["outer_iterations"] = sol.outer_iterations;
    out["deferrals"] = sol.deferrals;
    out["nodes"] = sol.nodes;
    nlohmann::ordered_json routes = nlohmann::ordered_json::array();
    for (const auto& r : sol.routing) {
        nlohmann::ordered_json jr;
        jr["pair"] = r.pair_idx;
        jr["paths"] = routing_json(r.paths);
        routes.push_back(std::move(jr));
    }
    out["routing"] = std::move(routes);
    out["audits_ok"] = sol.ledger.all_ok();
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int run_solve_energy(const std::string& file, const CommonFlags& flags) {
    auto parsed = parse_file(file, flags.strict);
    auto inst = parsed.file.to_eevrp();
    auto knobs = load_knobs(flags.knobs_file);
    auto red = ncnd::reduce_to_mcnc(inst);
    auto sol = ncnd::solve_mcnc(red.mcnc, knobs.mcnc, flags.seed);
    auto lifted = ncnd::lift_solution(sol, red, inst);
    dump_ledger(sol.ledger, flags.ledger_path);
    nlohmann::ordered_json out;
    out["energy"] = lifted.energy;
    out["q_prime"] = red.tiers.q_prime;
    out["copies_per_node"] = red.tiers.copies_per_node;
    out["bicriteria_factor"] = lifted.bicriteria_factor;
    out["reduced_cost"] = ncnd::format_rational(sol.cost);
    out["congestion_over_q"] = sol.congestion_over_q;
    nlohmann::ordered_json routes = nlohmann::ordered_json::array();
    for (const auto& [pid, paths] : lifted.routing) {
        nlohmann::ordered_json jr;
        jr["pair"] = pid;
        jr["paths"] = routing_json(paths);
        routes.push_back(std::move(jr));
    }
    out["routing"] = std::move(routes);
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int run_oracle(const std::string& file, const CommonFlags& flags, int max_nodes, int max_pairs,
               double time_cap) {
    auto parsed = parse_file(file, flags.strict);
    ncnd::OracleBudget budget;
    budget.max_nodes = max_nodes;
    budget.max_pairs = max_pairs;
    budget.time_cap_seconds = time_cap;
    nlohmann::ordered_json out;
    if (parsed.file.kind == "ssnc") {
        auto res = ncnd::exact_ssnc(parsed.file.to_ssnc(), budget);
        out["feasible"] = res.feasible;
        if (res.feasible) {
            out["cost"] = ncnd::format_rational(res.cost);
            out["nodes"] = res.nodes;
            out["unsplittable_checked"] = res.unsplittable_checked;
        }
    } else if (parsed.file.kind == "mcnc") {
        auto res = ncnd::exact_mcnc_fractional(parsed.file.to_mcnc(), budget);
        out["feasible"] = res.feasible;
        if (res.feasible) {
            out["cost"] = ncnd::format_rational(res.cost);
            out["nodes"] = res.nodes;
            if (res.integral_cost)
                out["integral_cost"] = ncnd::format_rational(*res.integral_cost);
        }
    } else {
        throw std::invalid_argument("oracle supports ssnc and mcnc instances");
    }
    std::cout << out.dump(2) << "\n";
    if (!out["feasible"].get<bool>()) return kExitInfeasible;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Node-capacitated network design toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;

    std::string in_file, out_file, gen_kind = "random-geometric";
    std::vector<std::string> gen_params, bench_files;
    std::string seeds_arg = "1";
    bool with_timing = false, no_oracle = false, lenient = false;
    int oracle_nodes = 12, oracle_pairs = 5;
    double oracle_time = 120.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", flags.seed, "random seed");
        cmd->add_option("--knobs", flags.knobs_file, "knobs JSON file");
        cmd->add_option("--audit-ledger", flags.ledger_path, "write the audit ledger (JSONL)");
        cmd->add_flag("--lenient", lenient, "warn instead of rejecting unknown fields");
        cmd->add_flag("--strict", flags.strict, "reject unknown instance fields (default)");
    };

    auto* ssnc_cmd = app.add_subcommand("solve-ssnc", "solve a single-sink instance");
    ssnc_cmd->add_option("file", in_file, "instance file")->required();
    add_common(ssnc_cmd);

    auto* mcnc_cmd = app.add_subcommand("solve-mcnc", "solve a multicommodity instance");
    mcnc_cmd->add_option("file", in_file, "instance file")->required();
    add_common(mcnc_cmd);

    auto* energy_cmd = app.add_subcommand("solve-energy", "solve an energy routing instance");
    energy_cmd->add_option("file", in_file, "instance file")->required();
    add_common(energy_cmd);

    auto* oracle_cmd = app.add_subcommand("oracle", "exact small-instance baseline");
    oracle_cmd->add_option("file", in_file, "instance file")->required();
    oracle_cmd->add_option("--max-nodes", oracle_nodes, "enumeration node budget");
    oracle_cmd->add_option("--max-pairs", oracle_pairs, "unsplittable-check pair budget");
    oracle_cmd->add_option("--time-cap", oracle_time, "seconds before Exhausted");
    add_common(oracle_cmd);

    auto* gen_cmd = app.add_subcommand("gen", "generate an instance");
    gen_cmd->add_option("kind", gen_kind,
                        "random-geometric | grid | star-pathological | binary-merge | dumbbell");
    gen_cmd->add_option("--param", gen_params, "key=value generator parameters");
    gen_cmd->add_option("--out", out_file, "output file (default stdout)");
    add_common(gen_cmd);

    auto* bench_cmd = app.add_subcommand("bench", "run the benchmark harness");
    bench_cmd->add_option("files", bench_files, "instance files")->required();
    bench_cmd->add_option("--seeds", seeds_arg, "comma-separated seed list");
    bench_cmd->add_flag("--with-timing", with_timing, "append a runtime column");
    bench_cmd->add_flag("--no-oracle", no_oracle, "skip oracle comparisons");
    bench_cmd->add_option("--out", out_file, "write the table to a file");
    add_common(bench_cmd);

    CLI11_PARSE(app, argc, argv);
    if (lenient) flags.strict = false;

    try {
        if (app.got_subcommand(ssnc_cmd)) return run_solve_ssnc(in_file, flags);
        if (app.got_subcommand(mcnc_cmd)) return run_solve_mcnc(in_file, flags);
        if (app.got_subcommand(energy_cmd)) return run_solve_energy(in_file, flags);
        if (app.got_subcommand(oracle_cmd))
            return run_oracle(in_file, flags, oracle_nodes, oracle_pairs, oracle_time);
        if (app.got_subcommand(gen_cmd)) {
            std::map<std::string, std::string> params;
            for (const auto& kv : gen_params) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("--param expects key=value, got " + kv);
                params[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            auto file = ncnd::generate(gen_kind, params, flags.seed);
            auto text = ncnd::serialize_instance(file);
            if (out_file.empty())
                std::cout << text;
            else
                write_file(out_file, text);
            return kExitOk;
        }
        if (app.got_subcommand(bench_cmd)) {
            std::vector<std::pair<std::string, ncnd::InstanceFile>> corpus;
            for (const auto& f : bench_files)
                corpus.push_back({f, parse_file(f, flags.strict).file});
            ncnd::BenchOptions opts;
            opts.with_timing = with_timing;
            opts.run_oracle = !no_oracle;
            auto knobs = load_knobs(flags.knobs_file);
            opts.ssnc = knobs.ssnc;
            opts.mcnc = knobs.mcnc;
            opts.seeds.clear();
            std::stringstream ss(seeds_arg);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) opts.seeds.push_back(std::stoull(tok));
            if (opts.seeds.empty()) opts.seeds.push_back(1);
            auto res = ncnd::bench(corpus, opts);
            dump_ledger(res.ledger, flags.ledger_path);
            if (out_file.empty())
                std::cout << res.table;
            else
                write_file(out_file, res.table);
            return kExitOk;
        }
    } catch (const ncnd::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ncnd::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ncnd::PhaseStallError& e) {
        std::cerr << "stall: " << e.what() << "\n";
        return kExitStall;
    } catch (const ncnd::OuterStallError& e) {
        std::cerr << "stall: " << e.what() << "\n";
        return kExitStall;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
