#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "relaysched/analytic.hpp"
#include "relaysched/random.hpp"
#include "relaysched/sim.hpp"
#include "relaysched/solver.hpp"
#include "relaysched/system.hpp"

namespace relaysched {

// Experiment configuration or validation problem; the message names the
// offending field.
class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command {
    Solve,
    Throughput,
    Simulate,
    SweepFig2, // fixed Omega_s2=4, Omega_r2=6; Omega_s1+Omega_r1=10, ratio = Omega_s1/Omega_r1
    SweepFig3, // fixed Omega_r1=4, Omega_r2=6; Omega_s1+Omega_s2=10, ratio = Omega_s1/Omega_s2
    SweepFig4, // same sweep as SweepFig3 (throughput view of the same grid)
    Custom,    // sweep an explicit parameter path of the base system
};

struct SweepSettings {
    std::string parameter = "ratio";
    std::vector<double> values;
};

struct SimSettings {
    std::uint64_t n_slots = 1'000'000;
    std::optional<std::uint64_t> warmup_slots; // default: n_slots / 10
    std::uint64_t seed = 0;
    double prefill_bits = 0.0;
    std::string policy = "optimal_weighted";
    std::optional<std::vector<double>> lambdas;

    std::uint64_t warmup() const { return warmup_slots.value_or(n_slots / 10); }
};

struct ExperimentSpec {
    Command command = Command::Solve;
    std::optional<SystemConfig> system; // required unless a preset sweep
    SolverSettings solver;
    SimSettings sim;
    SweepSettings sweep;
    std::string output_path;
};

// One sweep point. Failed solves leave NaNs in their columns; the row is
// still emitted and `warning` carries the reason.
struct SweepRow {
    double sweep_param = 0.0;
    std::vector<double> lambda_opt;
    std::vector<double> lambda_sub;
    double thr_analytic = std::numeric_limits<double>::quiet_NaN();
    double thr_sim_opt = std::numeric_limits<double>::quiet_NaN();
    double thr_sim_opt_ci95 = std::numeric_limits<double>::quiet_NaN();
    double thr_sim_maxmax = std::numeric_limits<double>::quiet_NaN();
    double thr_sim_maxmax_ci95 = std::numeric_limits<double>::quiet_NaN();
    double thr_sub = std::numeric_limits<double>::quiet_NaN();
    bool opt_solve_failed = false;
    bool sub_solve_failed = false;
    std::string warning;

    bool solve_failed() const { return opt_solve_failed || sub_solve_failed; }
};

namespace detail {

inline const double kNaN = std::numeric_limits<double>::quiet_NaN();

inline void require_keys(const nlohmann::json& obj, const char* where,
                         std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k)
                ok = true;
        if (!ok)
            throw SpecError(std::string(where) + ": unknown field '" + it.key() + "'");
    }
}

inline double as_positive(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number())
        throw SpecError(field + ": expected a number");
    const double x = v.get<double>();
    if (!(x > 0.0) || !std::isfinite(x))
        throw SpecError(field + ": must be positive and finite");
    return x;
}

inline LinkDistribution parse_link(const nlohmann::json& j, const std::string& field) {
    if (j.is_number()) // bare number == Rayleigh mean SNR
        return LinkDistribution::rayleigh_snr(as_positive(j, field + ".mean_snr"));
    if (!j.is_object())
        throw SpecError(field + ": expected a number or a distribution object");
    require_keys(j, field.c_str(), {"family", "mean_snr", "support", "probs"});
    const std::string family = j.value("family", "rayleigh_snr");
    if (family == "rayleigh_snr") {
        if (!j.contains("mean_snr"))
            throw SpecError(field + ".mean_snr: required for rayleigh_snr");
        return LinkDistribution::rayleigh_snr(as_positive(j.at("mean_snr"), field + ".mean_snr"));
    }
    if (family == "discrete_grid") {
        if (!j.contains("support") || !j.contains("probs"))
            throw SpecError(field + ": discrete_grid requires 'support' and 'probs'");
        try {
            return LinkDistribution::discrete_grid(j.at("support").get<std::vector<double>>(),
                                                   j.at("probs").get<std::vector<double>>());
        } catch (const std::invalid_argument& e) {
            throw SpecError(field + ": " + e.what());
        }
    }
    throw SpecError(field + ".family: unknown family '" + family + "'");
}

inline std::vector<LinkDistribution> parse_links(const nlohmann::json& j,
                                                 const std::string& field) {
    if (!j.is_array() || j.empty())
        throw SpecError(field + ": expected a non-empty array");
    std::vector<LinkDistribution> out;
    out.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(parse_link(j[k], field + "[" + std::to_string(k) + "]"));
    return out;
}

inline MetricKind parse_metric(const nlohmann::json& j) {
    const std::string name = j.get<std::string>();
    if (name == "log_capacity")
        return MetricKind::LogCapacity;
    if (name == "linear")
        return MetricKind::Linear;
    throw SpecError("system.metric: expected 'log_capacity' or 'linear', got '" + name + "'");
}

inline SystemConfig parse_system(const nlohmann::json& j) {
    require_keys(j, "system",
                 {"metric", "source_snr_means", "dest_snr_means", "source_links", "dest_links"});
    const bool means = j.contains("source_snr_means") || j.contains("dest_snr_means");
    const bool links = j.contains("source_links") || j.contains("dest_links");
    if (means && links)
        throw SpecError("system: give either *_snr_means or *_links, not both");
    std::vector<LinkDistribution> src, dst;
    if (means) {
        if (!j.contains("source_snr_means") || !j.contains("dest_snr_means"))
            throw SpecError("system: source_snr_means and dest_snr_means must both be present");
        src = parse_links(j.at("source_snr_means"), "system.source_snr_means");
        dst = parse_links(j.at("dest_snr_means"), "system.dest_snr_means");
    } else if (links) {
        if (!j.contains("source_links") || !j.contains("dest_links"))
            throw SpecError("system: source_links and dest_links must both be present");
        src = parse_links(j.at("source_links"), "system.source_links");
        dst = parse_links(j.at("dest_links"), "system.dest_links");
    } else {
        throw SpecError("system: link distributions are required");
    }
    if (src.size() != dst.size())
        throw SpecError("system: source and dest vectors must have the same length (got " +
                        std::to_string(src.size()) + " vs " + std::to_string(dst.size()) + ")");
    MetricKind metric = MetricKind::LogCapacity;
    if (j.contains("metric"))
        metric = parse_metric(j.at("metric"));
    return SystemConfig(std::move(src), std::move(dst), metric);
}

inline Command parse_command(const std::string& name) {
    if (name == "solve")
        return Command::Solve;
    if (name == "throughput")
        return Command::Throughput;
    if (name == "simulate")
        return Command::Simulate;
    if (name == "sweep_fig2")
        return Command::SweepFig2;
    if (name == "sweep_fig3")
        return Command::SweepFig3;
    if (name == "sweep_fig4")
        return Command::SweepFig4;
    if (name == "custom")
        return Command::Custom;
    throw SpecError("command: unknown command '" + name + "'");
}

} // namespace detail

inline bool is_sweep_command(Command c) {
    return c == Command::SweepFig2 || c == Command::SweepFig3 || c == Command::SweepFig4 ||
           c == Command::Custom;
}

// Default ratio grids of the preset sweeps. The fig2 family has no
// balancing weights below Omega_s1/Omega_r1 of roughly 1.6 (both pairs
// would need source-heavy schedules at once), so its grid starts at 2.
inline std::vector<double> default_sweep_values(Command c) {
    if (c == Command::SweepFig2)
        return {2.0, 3.0, 4.5, 6.5, 9.0};
    if (c == Command::SweepFig3 || c == Command::SweepFig4)
        return {1.0 / 9.0, 0.25, 2.0 / 3.0, 1.0, 7.0 / 3.0, 4.0, 9.0};
    return {};
}

// System at one preset sweep point.
inline SystemConfig sweep_point_system(Command c, double ratio) {
    if (c == Command::SweepFig2) {
        const double om_r1 = 10.0 / (1.0 + ratio);
        return SystemConfig::rayleigh({10.0 - om_r1, 4.0}, {om_r1, 6.0});
    }
    const double om_s2 = 10.0 / (1.0 + ratio);
    return SystemConfig::rayleigh({10.0 - om_s2, om_s2}, {4.0, 6.0});
}

// Applies a custom sweep parameter path ("system.source_snr_means[k]" or
// "system.dest_snr_means[k]") to a copy of the base system.
inline SystemConfig apply_parameter(const SystemConfig& base, const std::string& path,
                                    double value) {
    const auto open = path.find('[');
    const auto close = path.find(']');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw SpecError("sweep.parameter: expected 'system.source_snr_means[k]' or "
                        "'system.dest_snr_means[k]', got '" + path + "'");
    const std::string head = path.substr(0, open);
    std::size_t index = 0;
    try {
        index = static_cast<std::size_t>(std::stoul(path.substr(open + 1, close - open - 1)));
    } catch (const std::exception&) {
        throw SpecError("sweep.parameter: bad index in '" + path + "'");
    }
    SystemConfig sys = base;
    std::vector<LinkDistribution>* side = nullptr;
    if (head == "system.source_snr_means")
        side = &sys.source_dists;
    else if (head == "system.dest_snr_means")
        side = &sys.dest_dists;
    else
        throw SpecError("sweep.parameter: unknown path '" + head + "'");
    if (index >= side->size())
        throw SpecError("sweep.parameter: index " + std::to_string(index) + " out of range");
    if (!(*side)[index].is_continuous())
        throw SpecError("sweep.parameter: can only sweep the mean SNR of a Rayleigh link");
    (*side)[index] = LinkDistribution::rayleigh_snr(value);
    return sys;
}

inline ExperimentSpec parse_spec(const nlohmann::json& j) {
    if (!j.is_object())
        throw SpecError("spec: top level must be a JSON object");
    detail::require_keys(j, "spec",
                         {"command", "system", "solver", "sim", "sweep", "output_path"});
    ExperimentSpec spec;
    if (!j.contains("command"))
        throw SpecError("command: required");
    spec.command = detail::parse_command(j.at("command").get<std::string>());

    if (j.contains("system"))
        spec.system = detail::parse_system(j.at("system"));

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::require_keys(s, "solver",
                             {"residual_tol", "quad_rel_tol", "max_iterations",
                              "lambda_bounds_margin", "discrete_grid_step"});
        if (s.contains("residual_tol"))
            spec.solver.residual_tol = detail::as_positive(s.at("residual_tol"), "solver.residual_tol");
        if (s.contains("quad_rel_tol"))
            spec.solver.quad_rel_tol = detail::as_positive(s.at("quad_rel_tol"), "solver.quad_rel_tol");
        if (s.contains("max_iterations"))
            spec.solver.max_iterations = s.at("max_iterations").get<int>();
        if (s.contains("lambda_bounds_margin"))
            spec.solver.lambda_bounds_margin =
                detail::as_positive(s.at("lambda_bounds_margin"), "solver.lambda_bounds_margin");
        if (s.contains("discrete_grid_step"))
            spec.solver.discrete_grid_step =
                detail::as_positive(s.at("discrete_grid_step"), "solver.discrete_grid_step");
        try {
            spec.solver.validate();
        } catch (const std::invalid_argument& e) {
            throw SpecError(std::string("solver: ") + e.what());
        }
    }

    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        detail::require_keys(s, "sim",
                             {"n_slots", "warmup_slots", "seed", "prefill_bits", "policy",
                              "lambdas"});
        if (s.contains("n_slots"))
            spec.sim.n_slots = s.at("n_slots").get<std::uint64_t>();
        if (spec.sim.n_slots < 1)
            throw SpecError("sim.n_slots: must be >= 1");
        if (s.contains("warmup_slots"))
            spec.sim.warmup_slots = s.at("warmup_slots").get<std::uint64_t>();
        if (s.contains("seed"))
            spec.sim.seed = s.at("seed").get<std::uint64_t>();
        if (s.contains("prefill_bits")) {
            spec.sim.prefill_bits = s.at("prefill_bits").get<double>();
            if (!(spec.sim.prefill_bits >= 0.0))
                throw SpecError("sim.prefill_bits: must be >= 0");
        }
        if (s.contains("policy")) {
            spec.sim.policy = s.at("policy").get<std::string>();
            if (spec.sim.policy != "optimal_weighted" && spec.sim.policy != "max_max" &&
                spec.sim.policy != "uniform_random")
                throw SpecError("sim.policy: expected optimal_weighted, max_max or uniform_random");
        }
        if (s.contains("lambdas"))
            spec.sim.lambdas = s.at("lambdas").get<std::vector<double>>();
        if (spec.sim.warmup() >= spec.sim.n_slots)
            throw SpecError("sim.warmup_slots: must be < n_slots");
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        detail::require_keys(s, "sweep", {"parameter", "values"});
        if (s.contains("parameter"))
            spec.sweep.parameter = s.at("parameter").get<std::string>();
        if (s.contains("values"))
            spec.sweep.values = s.at("values").get<std::vector<double>>();
    }
    if (j.contains("output_path"))
        spec.output_path = j.at("output_path").get<std::string>();

    // command-specific requirements
    if (is_sweep_command(spec.command)) {
        if (spec.sweep.values.empty())
            spec.sweep.values = default_sweep_values(spec.command);
        if (spec.sweep.values.empty())
            throw SpecError("sweep.values: required for custom sweeps");
        for (double v : spec.sweep.values)
            if (!(v > 0.0) || !std::isfinite(v))
                throw SpecError("sweep.values: all values must be positive and finite");
        if (spec.command == Command::Custom) {
            if (!spec.system)
                throw SpecError("system: required for custom sweeps");
            if (spec.sweep.parameter == "ratio")
                throw SpecError("sweep.parameter: custom sweeps need an explicit parameter path");
            apply_parameter(*spec.system, spec.sweep.parameter, spec.sweep.values.front());
        }
    } else {
        if (!spec.system)
            throw SpecError("system: required for " + std::string(j.at("command").get<std::string>()));
        if (spec.command == Command::Simulate && spec.sim.policy == "optimal_weighted" &&
            spec.sim.lambdas) {
            if (spec.sim.lambdas->size() != spec.system->n_pairs)
                throw SpecError("sim.lambdas: length must equal the number of pairs");
            try {
                WeightVector(*spec.sim.lambdas).validate();
            } catch (const std::invalid_argument& e) {
                throw SpecError(std::string("sim.lambdas: ") + e.what());
            }
        }
    }
    return spec;
}

// Reads and validates a JSON experiment spec.
inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw SpecError("cannot open spec file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SpecError("parse error in '" + path + "': " + e.what());
    }
    return parse_spec(j);
}

// One fully-computed sweep point: optimal and sub-optimal weights, the
// analytic throughputs, and the Monte Carlo runs of the weighted scheme
// and the Max-Max baseline. Max-Max always starts with empty buffers.
inline SweepRow compute_sweep_row(const SystemConfig& base, double sweep_param,
                                  const SolverSettings& solver, const SimSettings& sim,
                                  std::uint64_t point_seed) {
    SweepRow row;
    row.sweep_param = sweep_param;
    const std::size_t n = base.n_pairs;
    row.lambda_opt.assign(n, detail::kNaN);
    row.lambda_sub.assign(n, detail::kNaN);
    const SystemConfig sys_log = base.with_metric(MetricKind::LogCapacity);
    const SystemConfig sys_lin = base.with_metric(MetricKind::Linear);

    std::optional<WeightVector> opt, sub;
    try {
        opt = solve_lambda(sys_log, solver);
        row.lambda_opt = opt->lambdas;
    } catch (const std::exception& e) {
        row.opt_solve_failed = true;
        row.warning += std::string("optimal solve failed: ") + e.what() + "; ";
    }
    try {
        sub = solve_lambda(sys_lin, solver);
        row.lambda_sub = sub->lambdas;
    } catch (const std::exception& e) {
        row.sub_solve_failed = true;
        row.warning += std::string("sub-optimal solve failed: ") + e.what() + "; ";
    }

    if (opt) {
        row.thr_analytic = analytic_throughput(*opt, sys_log, solver).total;
        SimConfig sc;
        sc.system = sys_log;
        sc.policy = Policy::optimal_weighted(*opt, MetricKind::LogCapacity);
        sc.n_slots = sim.n_slots;
        sc.warmup_slots = sim.warmup();
        sc.seed = derive_seed(point_seed, 1);
        sc.prefill_bits = sim.prefill_bits;
        const auto r = run(sc);
        row.thr_sim_opt = r.report.total;
        row.thr_sim_opt_ci95 = r.report.ci95_halfwidth.value_or(0.0);
    }
    if (sub)
        row.thr_sub = analytic_throughput(*sub, sys_lin, solver).total;

    SimConfig mm;
    mm.system = sys_log;
    mm.policy = Policy::max_max();
    mm.n_slots = sim.n_slots;
    mm.warmup_slots = sim.warmup();
    mm.seed = derive_seed(point_seed, 2);
    mm.prefill_bits = 0.0;
    const auto rmm = run(mm);
    row.thr_sim_maxmax = rmm.report.total;
    row.thr_sim_maxmax_ci95 = rmm.report.ci95_halfwidth.value_or(0.0);
    return row;
}

// Runs every sweep point on a bounded worker pool. Rows come back in grid
// order no matter how workers are scheduled; each point draws its own seed
// from (spec seed, point index).
inline std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, unsigned parallel = 1) {
    if (!is_sweep_command(spec.command))
        throw std::invalid_argument("run_sweep: spec has a non-sweep command");
    const auto& values = spec.sweep.values;
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= values.size())
                return;
            SystemConfig sys =
                spec.command == Command::Custom
                    ? apply_parameter(*spec.system, spec.sweep.parameter, values[idx])
                    : sweep_point_system(spec.command, values[idx]);
            rows[idx] = compute_sweep_row(sys, values[idx], spec.solver, spec.sim,
                                          derive_seed(spec.sim.seed, idx));
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(parallel, values.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    return rows;
}

// Shortest exact decimal form; CSV output must round-trip bit-for-bit.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// CSV with the fixed column contract; `dat` switches to a gnuplot-style
// space-separated table with a '#' header.
inline std::string sweep_table(const std::vector<SweepRow>& rows, std::size_t n_pairs,
                               bool dat = false) {
    const char sep = dat ? ' ' : ',';
    std::ostringstream out;
    out << (dat ? "# " : "") << "sweep_param";
    for (std::size_t i = 1; i <= n_pairs; ++i)
        out << sep << "lambda_opt_" << i;
    for (std::size_t i = 1; i <= n_pairs; ++i)
        out << sep << "lambda_sub_" << i;
    out << sep << "thr_analytic" << sep << "thr_sim_opt" << sep << "thr_sim_opt_ci95" << sep
        << "thr_sim_maxmax" << sep << "thr_sim_maxmax_ci95" << sep << "thr_sub" << "\n";
    for (const auto& row : rows) {
        out << format_double(row.sweep_param);
        for (double v : row.lambda_opt)
            out << sep << format_double(v);
        for (double v : row.lambda_sub)
            out << sep << format_double(v);
        out << sep << format_double(row.thr_analytic) << sep
            << format_double(row.thr_sim_opt) << sep
            << format_double(row.thr_sim_opt_ci95) << sep
            << format_double(row.thr_sim_maxmax) << sep
            << format_double(row.thr_sim_maxmax_ci95) << sep
            << format_double(row.thr_sub) << "\n";
    }
    return out.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, std::size_t n_pairs) {
    return sweep_table(rows, n_pairs, false);
}

} // namespace relaysched
