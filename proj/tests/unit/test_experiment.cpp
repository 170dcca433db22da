#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "relaysched/experiment.hpp"

using namespace relaysched;
using nlohmann::json;

TEST_CASE("minimal solve spec gets defaults") {
    const auto spec = parse_spec(json::parse(R"({
        "command": "solve",
        "system": {"source_snr_means": [4, 5], "dest_snr_means": [5, 6]}
    })"));
    REQUIRE(spec.command == Command::Solve);
    REQUIRE(spec.system->n_pairs == 2);
    REQUIRE(spec.system->metric == MetricKind::LogCapacity);
    REQUIRE(spec.solver.residual_tol == 1e-6);
    REQUIRE(spec.sim.seed == 0);
    REQUIRE(spec.sim.n_slots == 1'000'000);
    REQUIRE(spec.sim.warmup() == 100'000);
}

TEST_CASE("negative mean SNR is reported by field name") {
    REQUIRE_THROWS_WITH(parse_spec(json::parse(R"({
        "command": "solve",
        "system": {"source_snr_means": [-1, 5], "dest_snr_means": [5, 6]}
    })")),
                        Catch::Matchers::ContainsSubstring("mean_snr"));
}

TEST_CASE("mismatched vector lengths are rejected") {
    REQUIRE_THROWS_AS(parse_spec(json::parse(R"({
        "command": "solve",
        "system": {"source_snr_means": [4, 5, 6], "dest_snr_means": [5, 6]}
    })")),
                      SpecError);
}

TEST_CASE("unknown fields are rejected") {
    REQUIRE_THROWS_WITH(parse_spec(json::parse(R"({
        "command": "solve",
        "system": {"source_snr_means": [4], "dest_snr_means": [5]},
        "typo_field": 1
    })")),
                        Catch::Matchers::ContainsSubstring("typo_field"));
}

TEST_CASE("discrete links parse") {
    const auto spec = parse_spec(json::parse(R"({
        "command": "solve",
        "system": {
            "source_links": [
                {"family": "discrete_grid", "support": [1, 3, 7], "probs": [0.25, 0.5, 0.25]},
                {"family": "rayleigh_snr", "mean_snr": 2.5}
            ],
            "dest_links": [3.0, {"family": "rayleigh_snr", "mean_snr": 4}]
        }
    })"));
    REQUIRE(spec.system->source_dists[0].family() == FadingFamily::DiscreteGrid);
    REQUIRE(spec.system->source_dists[1].mean_snr() == 2.5);
    REQUIRE(spec.system->dest_dists[0].mean_snr() == 3.0);
}

TEST_CASE("preset sweeps default their grids") {
    const auto fig2 = parse_spec(json::parse(R"({"command": "sweep_fig2"})"));
    REQUIRE(fig2.sweep.values == std::vector<double>{2.0, 3.0, 4.5, 6.5, 9.0});
    const auto fig3 = parse_spec(json::parse(R"({"command": "sweep_fig3"})"));
    REQUIRE(fig3.sweep.values.size() == 7);
    const auto fig4 = parse_spec(json::parse(R"({"command": "sweep_fig4"})"));
    REQUIRE(fig4.sweep.values == fig3.sweep.values);
}

TEST_CASE("sweep grids must be positive") {
    REQUIRE_THROWS_AS(parse_spec(json::parse(R"({
        "command": "sweep_fig2", "sweep": {"values": [1.0, -2.0]}
    })")),
                      SpecError);
}

TEST_CASE("custom sweeps need a parameter path and a base system") {
    REQUIRE_THROWS_AS(parse_spec(json::parse(R"({
        "command": "custom", "sweep": {"values": [1, 2]}
    })")),
                      SpecError);
    const auto spec = parse_spec(json::parse(R"({
        "command": "custom",
        "system": {"source_snr_means": [4, 5], "dest_snr_means": [5, 6]},
        "sweep": {"parameter": "system.source_snr_means[0]", "values": [1, 2]}
    })"));
    const auto sys = apply_parameter(*spec.system, spec.sweep.parameter, 7.25);
    REQUIRE(sys.source_dists[0].mean_snr() == 7.25);
    REQUIRE(sys.source_dists[1].mean_snr() == 5.0);
}

TEST_CASE("bad parameter paths are rejected") {
    const auto base = SystemConfig::rayleigh({4.0, 5.0}, {5.0, 6.0});
    REQUIRE_THROWS_AS(apply_parameter(base, "system.nonsense[0]", 1.0), SpecError);
    REQUIRE_THROWS_AS(apply_parameter(base, "system.source_snr_means[9]", 1.0), SpecError);
    REQUIRE_THROWS_AS(apply_parameter(base, "system.source_snr_means", 1.0), SpecError);
}

TEST_CASE("fig2 point systems honour the constrained sum") {
    const auto sys = sweep_point_system(Command::SweepFig2, 4.0);
    REQUIRE(sys.source_dists[0].mean_snr() == Catch::Approx(8.0));
    REQUIRE(sys.dest_dists[0].mean_snr() == Catch::Approx(2.0));
    REQUIRE(sys.source_dists[1].mean_snr() == 4.0);
    REQUIRE(sys.dest_dists[1].mean_snr() == 6.0);
    const auto sys34 = sweep_point_system(Command::SweepFig3, 2.0 / 3.0);
    REQUIRE(sys34.source_dists[0].mean_snr() == Catch::Approx(4.0));
    REQUIRE(sys34.source_dists[1].mean_snr() == Catch::Approx(6.0));
    REQUIRE(sys34.dest_dists[0].mean_snr() == 4.0);
    REQUIRE(sys34.dest_dists[1].mean_snr() == 6.0);
}

TEST_CASE("load_spec reports parse errors with context") {
    const std::string path = "bad_spec_test.json";
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    REQUIRE_THROWS_WITH(load_spec(path), Catch::Matchers::ContainsSubstring("parse error"));
    std::remove(path.c_str());
    REQUIRE_THROWS_WITH(load_spec("missing_file.json"),
                        Catch::Matchers::ContainsSubstring("cannot open"));
}

TEST_CASE("sweep rows and CSV are reproducible bit for bit") {
    ExperimentSpec spec;
    spec.command = Command::SweepFig3;
    spec.sweep.values = {2.0 / 3.0, 4.0};
    spec.sim.n_slots = 20000;
    spec.sim.warmup_slots = 2000;
    spec.sim.seed = 42;
    const auto rows1 = run_sweep(spec, 1);
    const auto rows2 = run_sweep(spec, 1);
    const auto csv1 = sweep_csv(rows1, 2);
    const auto csv2 = sweep_csv(rows2, 2);
    REQUIRE(csv1 == csv2);
    REQUIRE(csv1.substr(0, csv1.find('\n')) ==
            "sweep_param,lambda_opt_1,lambda_opt_2,lambda_sub_1,lambda_sub_2,thr_analytic,"
            "thr_sim_opt,thr_sim_opt_ci95,thr_sim_maxmax,thr_sim_maxmax_ci95,thr_sub");
    REQUIRE(rows1.size() == 2);
    for (const auto& row : rows1) {
        REQUIRE_FALSE(row.solve_failed());
        for (double l : row.lambda_opt) {
            REQUIRE(l > -1.0);
            REQUIRE(l < 0.0);
        }
        REQUIRE(std::isfinite(row.thr_analytic));
        REQUIRE(row.thr_sim_opt_ci95 > 0.0);
    }
}

TEST_CASE("worker pools do not change the rows") {
    ExperimentSpec spec;
    spec.command = Command::SweepFig3;
    spec.sweep.values = {0.25, 1.0, 4.0};
    spec.sim.n_slots = 10000;
    spec.sim.warmup_slots = 1000;
    spec.sim.seed = 7;
    const auto serial = run_sweep(spec, 1);
    const auto parallel = run_sweep(spec, 3);
    REQUIRE(sweep_csv(serial, 2) == sweep_csv(parallel, 2));
}

TEST_CASE("failed solves emit NaN rows but keep the baseline") {
    // ratio 1 of the fig2 family is infeasible: both pairs are source-poor
    ExperimentSpec spec;
    spec.command = Command::SweepFig2;
    spec.sweep.values = {1.0};
    spec.sim.n_slots = 8000;
    spec.sim.warmup_slots = 800;
    spec.solver.max_iterations = 25;
    const auto rows = run_sweep(spec, 1);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].solve_failed());
    REQUIRE_FALSE(rows[0].warning.empty());
    REQUIRE(std::isnan(rows[0].lambda_opt[0]));
    REQUIRE(std::isnan(rows[0].thr_analytic));
    REQUIRE(std::isfinite(rows[0].thr_sim_maxmax));
    const auto csv = sweep_csv(rows, 2);
    REQUIRE(csv.find("nan") != std::string::npos);
}

TEST_CASE("dat output uses a hash header and spaces") {
    SweepRow row;
    row.sweep_param = 1.5;
    row.lambda_opt = {-0.5, -0.25};
    row.lambda_sub = {-0.5, -0.25};
    const auto dat = sweep_table({row}, 2, true);
    REQUIRE(dat.rfind("# sweep_param lambda_opt_1", 0) == 0);
    REQUIRE(dat.find(',') == std::string::npos);
}
