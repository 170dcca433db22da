// Command-line harness: solve for the optimal weighted factors, evaluate
// analytic throughput, run Monte Carlo simulations and reproduce the
// preset sweep families from a JSON experiment spec.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relaysched/analytic.hpp"
#include "relaysched/experiment.hpp"
#include "relaysched/sim.hpp"
#include "relaysched/solver.hpp"

namespace rs = relaysched;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolverFailure = 2;
constexpr int kExitIo = 3;

struct Options {
    std::string spec_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> slots;
    unsigned parallel = 1;
    bool quiet = false;
};

void write_output(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::ios_base::failure("cannot open output file '" + path + "'");
    out << content;
    if (!out)
        throw std::ios_base::failure("failed writing output file '" + path + "'");
}

rs::WeightVector resolve_lambdas(const rs::ExperimentSpec& spec) {
    if (spec.sim.lambdas)
        return rs::WeightVector(*spec.sim.lambdas);
    return rs::solve_lambda(*spec.system, spec.solver);
}

int cmd_solve(const rs::ExperimentSpec& spec, const Options& opt) {
    const auto lambdas = rs::solve_lambda(*spec.system, spec.solver);
    const auto residual = rs::balance_residual(lambdas, *spec.system, spec.solver);
    double norm = 0.0;
    for (double g : residual)
        norm = std::max(norm, std::abs(g));
    if (!opt.quiet) {
        std::printf("solved weighted factors (n_pairs = %zu)\n", spec.system->n_pairs);
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            std::printf("  lambda_%zu = %+.9f   residual g_%zu = %+.3e\n", i + 1, lambdas[i],
                        i + 1, residual[i]);
        std::printf("  ||g||_inf = %.3e\n", norm);
    }
    if (!opt.out_path.empty()) {
        std::string csv;
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            csv += (i ? "," : "") + std::string("lambda_") + std::to_string(i + 1);
        csv += ",residual_inf\n";
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            csv += (i ? "," : "") + rs::format_double(lambdas[i]);
        csv += "," + rs::format_double(norm) + "\n";
        write_output(opt.out_path, csv);
    }
    return kExitOk;
}

int cmd_throughput(const rs::ExperimentSpec& spec, const Options& opt) {
    const auto lambdas = resolve_lambdas(spec);
    const auto report = rs::analytic_throughput(lambdas, *spec.system, spec.solver);
    if (!opt.quiet) {
        std::printf("analytic throughput with lambda = (");
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            std::printf("%s%+.6f", i ? ", " : "", lambdas[i]);
        std::printf(")\n");
        for (std::size_t i = 0; i < report.per_pair.size(); ++i)
            std::printf("  pair %zu reception rate = %.9f bits/slot\n", i + 1,
                        report.per_pair[i]);
        std::printf("  total = %.9f bits/slot\n", report.total);
    }
    if (!opt.out_path.empty()) {
        std::string csv = "pair,rate\n";
        for (std::size_t i = 0; i < report.per_pair.size(); ++i)
            csv += std::to_string(i + 1) + "," + rs::format_double(report.per_pair[i]) +
                   "\n";
        csv += "total," + rs::format_double(report.total) + "\n";
        write_output(opt.out_path, csv);
    }
    return kExitOk;
}

int cmd_simulate(const rs::ExperimentSpec& spec, const Options& opt) {
    rs::SimConfig sim;
    sim.system = *spec.system;
    if (spec.sim.policy == "max_max")
        sim.policy = rs::Policy::max_max();
    else if (spec.sim.policy == "uniform_random")
        sim.policy = rs::Policy::uniform_random();
    else
        sim.policy = rs::Policy::optimal_weighted(resolve_lambdas(spec), spec.system->metric);
    sim.n_slots = spec.sim.n_slots;
    sim.warmup_slots = spec.sim.warmup();
    sim.seed = spec.sim.seed;
    sim.prefill_bits = spec.sim.prefill_bits;
    const auto result = rs::run(sim);
    const auto gaps = rs::empirical_balance(result);
    if (!opt.quiet) {
        std::printf("simulated %llu slots (measured %llu, warmup %llu, seed %llu)\n",
                    static_cast<unsigned long long>(sim.n_slots),
                    static_cast<unsigned long long>(result.measured_slots),
                    static_cast<unsigned long long>(sim.warmup_slots),
                    static_cast<unsigned long long>(sim.seed));
        for (std::size_t i = 0; i < result.pairs.size(); ++i)
            std::printf("  pair %zu: arrival %.6f  departure %.6f  gap %+.6f (se %.2e)\n", i + 1,
                        result.pairs[i].arrival_rate, result.pairs[i].departure_rate, gaps[i],
                        result.pairs[i].gap_se);
        std::printf("  throughput = %.6f bits/slot (ci95 +/- %.2e)\n", result.report.total,
                    result.report.ci95_halfwidth.value_or(0.0));
    }
    if (!opt.out_path.empty()) {
        std::string csv = "pair,arrival_rate,departure_rate,gap_se\n";
        for (std::size_t i = 0; i < result.pairs.size(); ++i)
            csv += std::to_string(i + 1) + "," +
                   rs::format_double(result.pairs[i].arrival_rate) + "," +
                   rs::format_double(result.pairs[i].departure_rate) + "," +
                   rs::format_double(result.pairs[i].gap_se) + "\n";
        csv += "throughput," + rs::format_double(result.report.total) + ",ci95," +
               rs::format_double(result.report.ci95_halfwidth.value_or(0.0)) + "\n";
        write_output(opt.out_path, csv);
    }
    return kExitOk;
}

int cmd_sweep(const rs::ExperimentSpec& spec, const Options& opt) {
    const auto rows = rs::run_sweep(spec, opt.parallel);
    const std::size_t n_pairs = spec.command == rs::Command::Custom ? spec.system->n_pairs : 2;
    for (const auto& row : rows)
        if (!row.warning.empty())
            std::fprintf(stderr, "warning: sweep point %g: %s\n", row.sweep_param,
                         row.warning.c_str());
    std::string out_path = !opt.out_path.empty() ? opt.out_path : spec.output_path;
    if (!out_path.empty()) {
        const bool dat = out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".dat";
        write_output(out_path, rs::sweep_table(rows, n_pairs, dat));
    }
    if (!opt.quiet) {
        std::printf("%-12s %-22s %-12s %-12s %-12s %-12s\n", "sweep_param", "lambda_opt",
                    "thr_analytic", "thr_sim_opt", "thr_maxmax", "thr_sub");
        for (const auto& row : rows) {
            std::string lams;
            for (std::size_t i = 0; i < row.lambda_opt.size(); ++i) {
                char b[24];
                std::snprintf(b, sizeof(b), "%s%+.4f", i ? "," : "", row.lambda_opt[i]);
                lams += b;
            }
            std::printf("%-12.6g %-22s %-12.6f %-12.6f %-12.6f %-12.6f\n", row.sweep_param,
                        lams.c_str(), row.thr_analytic, row.thr_sim_opt, row.thr_sim_maxmax,
                        row.thr_sub);
        }
    }
    for (const auto& row : rows)
        if (row.solve_failed())
            return kExitSolverFailure;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"buffer-aided relay multi-user scheduling toolkit"};
    Options opt;
    app.add_option("--spec", opt.spec_path, "JSON experiment spec")->required();
    app.add_option("--out", opt.out_path, "output file (CSV, or .dat for gnuplot)");
    std::uint64_t seed_flag = 0, slots_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "override the spec's RNG seed");
    auto* slots_opt = app.add_option("--slots", slots_flag, "override the spec's slot count");
    app.add_option("--parallel", opt.parallel, "worker threads for sweep points")
        ->check(CLI::PositiveNumber);
    app.add_flag("--quiet", opt.quiet, "suppress the stdout summary");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        rs::ExperimentSpec spec = rs::load_spec(opt.spec_path);
        if (const char* env = std::getenv("RELAY_SCHED_SEED")) {
            try {
                spec.sim.seed = std::stoull(env);
            } catch (const std::exception&) {
                std::fprintf(stderr, "error: RELAY_SCHED_SEED is not an integer: '%s'\n", env);
                return kExitUsage;
            }
        }
        if (*seed_opt)
            spec.sim.seed = seed_flag;
        if (*slots_opt) {
            if (slots_flag < 1 || spec.sim.warmup() >= slots_flag) {
                std::fprintf(stderr, "error: --slots must exceed the warmup window\n");
                return kExitUsage;
            }
            spec.sim.n_slots = slots_flag;
        }

        switch (spec.command) {
        case rs::Command::Solve:
            return cmd_solve(spec, opt);
        case rs::Command::Throughput:
            return cmd_throughput(spec, opt);
        case rs::Command::Simulate:
            return cmd_simulate(spec, opt);
        default:
            return cmd_sweep(spec, opt);
        }
    } catch (const rs::SpecError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const rs::SolveFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolverFailure;
    } catch (const rs::QuadratureFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolverFailure;
    } catch (const std::ios_base::failure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
