#include "ncnd/bench.hpp"

#include "ncnd/energy.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ncnd {
namespace {

std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

struct Row {
    std::string instance, kind, status = "ok";
    std::uint64_t seed = 0;
    int n = 0;
    std::int64_t q = 0;
    std::size_t k = 0;
    std::string cost = "n/a", oracle_cost = "n/a", ratio = "n/a", congestion = "n/a";
    int iterations = 0;
    std::int64_t deferrals = 0;
    long long runtime_ms = 0;
};

}  // namespace

BenchResult bench(const std::vector<std::pair<std::string, InstanceFile>>& corpus,
                  const BenchOptions& opts) {
    BenchResult result;
    std::ostringstream table;
    table << "instance\tkind\tseed\tn\tq\tk\tcost\toracle_cost\tratio\tcongestion_over_q\t"
             "iterations\tdeferrals\tstatus";
    if (opts.with_timing) table << "\truntime_ms";
    table << "\n";

    for (const auto& [name, file] : corpus) {
        for (std::uint64_t seed : opts.seeds) {
            Row row;
            row.instance = name;
            row.kind = file.kind;
            row.seed = seed;
            row.n = file.graph.node_count();
            auto start = std::chrono::steady_clock::now();
            try {
                if (file.kind == "ssnc") {
                    auto inst = file.to_ssnc();
                    row.q = inst.capacity;
                    row.k = inst.sources.size();
                    auto sol = solve_ssnc(inst, opts.ssnc);
                    row.cost = format_rational(sol.cost);
                    row.congestion = format_rational(sol.congestion);
                    row.iterations = 1;
                    result.ledger.append(sol.ledger);
                    std::optional<Rational> oracle_cost;
                    if (file.optimum) {
                        oracle_cost = file.optimum->cost;
                    } else if (opts.run_oracle && row.n <= opts.budget.max_nodes) {
                        try {
                            auto oracle = exact_ssnc(inst, opts.budget);
                            if (oracle.feasible) oracle_cost = oracle.cost;
                        } catch (const ExhaustedError&) {
                        }
                    }
                    if (oracle_cost) {
                        row.oracle_cost = format_rational(*oracle_cost);
                        auto rec = ratio_report(instance_digest(inst), sol.cost, oracle_cost,
                                                sol.congestion, result.ledger);
                        if (rec.ratio) row.ratio = fixed6(to_double(*rec.ratio));
                    }
                } else if (file.kind == "mcnc") {
                    auto inst = file.to_mcnc();
                    row.q = inst.capacity;
                    row.k = inst.pairs.size();
                    auto sol = solve_mcnc(inst, opts.mcnc, seed);
                    row.cost = format_rational(sol.cost);
                    row.congestion = fixed6(sol.congestion_over_q);
                    row.iterations = sol.outer_iterations;
                    row.deferrals = sol.deferrals;
                    result.ledger.append(sol.ledger);
                    std::optional<Rational> oracle_cost;
                    if (file.optimum) {
                        oracle_cost = file.optimum->cost;
                    } else if (opts.run_oracle && row.n <= opts.budget.max_nodes &&
                               static_cast<int>(row.k) <= opts.budget.max_pairs) {
                        try {
                            auto oracle = exact_mcnc_fractional(inst, opts.budget);
                            if (oracle.feasible) oracle_cost = oracle.cost;
                        } catch (const ExhaustedError&) {
                        }
                    }
                    if (oracle_cost) {
                        row.oracle_cost = format_rational(*oracle_cost);
                        auto rec = ratio_report(instance_digest(inst), sol.cost, oracle_cost,
                                                rational_from_double(sol.congestion_over_q),
                                                result.ledger);
                        if (rec.ratio) row.ratio = fixed6(to_double(*rec.ratio));
                    }
                } else if (file.kind == "eevrp") {
                    auto inst = file.to_eevrp();
                    row.k = inst.pairs.size();
                    auto red = reduce_to_mcnc(inst);
                    row.q = red.mcnc.capacity;
                    auto sol = solve_mcnc(red.mcnc, opts.mcnc, seed);
                    auto lifted = lift_solution(sol, red, inst);
                    row.cost = fixed6(lifted.energy);
                    row.congestion = fixed6(sol.congestion_over_q);
                    row.iterations = sol.outer_iterations;
                    row.deferrals = sol.deferrals;
                    result.ledger.append(sol.ledger);
                } else {
                    row.status = "error:unknown-kind";
                    ++result.failed_rows;
                }
            } catch (const InfeasibleError&) {
                row.status = "infeasible";
                ++result.failed_rows;
            } catch (const PhaseStallError&) {
                row.status = "stall";
                ++result.failed_rows;
            } catch (const OuterStallError&) {
                row.status = "stall";
                ++result.failed_rows;
            } catch (const NcndError& e) {
                row.status = std::string("error:") + e.what();
                ++result.failed_rows;
            }
            auto stop = std::chrono::steady_clock::now();
            row.runtime_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();

            table << row.instance << "\t" << row.kind << "\t" << row.seed << "\t" << row.n
                  << "\t" << row.q << "\t" << row.k << "\t" << row.cost << "\t"
                  << row.oracle_cost << "\t" << row.ratio << "\t" << row.congestion << "\t"
                  << row.iterations << "\t" << row.deferrals << "\t" << row.status;
            if (opts.with_timing) table << "\t" << row.runtime_ms;
            table << "\n";
        }
    }
    result.table = table.str();
    return result;
}

}  // namespace ncnd
