#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "relaysched/sim.hpp"
#include "relaysched/solver.hpp"

using namespace relaysched;

namespace {

SimConfig degenerate_config(double source_point, double dest_point, double prefill) {
    SimConfig c;
    c.system = SystemConfig({LinkDistribution::discrete_grid({source_point}, {1.0})},
                            {LinkDistribution::discrete_grid({dest_point}, {1.0})});
    c.policy = Policy::max_max();
    c.n_slots = 10;
    c.warmup_slots = 0;
    c.prefill_bits = prefill;
    return c;
}

} // namespace

TEST_CASE("empty buffer delivers nothing and counts the hit") {
    // Q = 0, destination SNR 3 -> capacity 2, min{0, 2} = 0
    auto cfg = degenerate_config(0.0, 3.0, 0.0);
    SimState state(1, 0.0);
    RandomStream rng(1);
    const auto out = step(state, cfg, rng);
    REQUIRE(out.departure_bits == 0.0);
    REQUIRE(state.queues[0] == 0.0);
    REQUIRE(state.empty_hit_count[0] == 1);
}

TEST_CASE("backlogged buffer delivers the channel capacity") {
    // Q = 5, destination SNR 3 -> delivers 2, queue drops to 3
    auto cfg = degenerate_config(0.0, 3.0, 5.0);
    SimState state(1, 5.0);
    RandomStream rng(1);
    const auto out = step(state, cfg, rng);
    REQUIRE(out.departure_bits == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(state.queues[0] == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(state.empty_hit_count[0] == 0);
}

TEST_CASE("selected source adds its capacity to the queue") {
    // Q = 1, source SNR 3 -> queue 3, arrived += 2 (dest capacity is 0 here)
    auto cfg = degenerate_config(3.0, 0.0, 1.0);
    SimState state(1, 1.0);
    RandomStream rng(1);
    const auto out = step(state, cfg, rng);
    REQUIRE(out.arrival_bits == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(state.queues[0] == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(state.arrived_bits[0] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("same-pair selection serves the previous slot's backlog first") {
    // source and dest both SNR 3 (capacity 2); queue starts empty, so the
    // first slot delivers 0 and leaves 2 bits behind, the second delivers 2
    auto cfg = degenerate_config(3.0, 3.0, 0.0);
    SimState state(1, 0.0);
    RandomStream rng(1);
    auto out = step(state, cfg, rng);
    REQUIRE(out.departure_bits == 0.0);
    REQUIRE(state.queues[0] == Catch::Approx(2.0));
    out = step(state, cfg, rng);
    REQUIRE(out.departure_bits == Catch::Approx(2.0));
    REQUIRE(state.queues[0] == Catch::Approx(2.0));
}

TEST_CASE("queues stay nonnegative and conservation holds while stepping") {
    SimConfig cfg;
    cfg.system = SystemConfig::rayleigh({6.0, 1.5}, {2.0, 5.0});
    cfg.policy = Policy::optimal_weighted(WeightVector({-0.35, -0.65}), MetricKind::LogCapacity);
    cfg.n_slots = 20000;
    cfg.warmup_slots = 0;
    cfg.seed = 33;
    SimState state(2, 0.0);
    RandomStream rng(cfg.seed);
    for (int t = 0; t < 20000; ++t) {
        step(state, cfg, rng);
        REQUIRE(state.queues[0] >= 0.0);
        REQUIRE(state.queues[1] >= 0.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double recon = state.arrived_bits[i] - state.delivered_bits[i];
        REQUIRE(state.queues[i] ==
                Catch::Approx(recon).epsilon(1e-6).margin(1e-6));
        REQUIRE(state.delivered_bits[i] <= state.arrived_bits[i] + 1e-9);
    }
}

TEST_CASE("exactly one source and one destination per measured slot") {
    SimConfig cfg;
    cfg.system = SystemConfig::rayleigh({2.0, 3.0, 4.0}, {4.0, 3.0, 2.0});
    cfg.policy = Policy::uniform_random();
    cfg.n_slots = 5000;
    cfg.warmup_slots = 500;
    cfg.seed = 4;
    const auto result = run(cfg);
    std::uint64_t src = 0, dst = 0;
    for (const auto& p : result.pairs) {
        src += p.source_selected;
        dst += p.dest_selected;
    }
    REQUIRE(src == result.measured_slots);
    REQUIRE(dst == result.measured_slots);
}

TEST_CASE("runs are bit-identical for a fixed seed") {
    SimConfig cfg;
    cfg.system = SystemConfig::rayleigh({5.0, 4.0}, {3.0, 6.0});
    cfg.policy = Policy::max_max();
    cfg.n_slots = 30000;
    cfg.warmup_slots = 3000;
    cfg.seed = 1234;
    const auto a = run(cfg);
    const auto b = run(cfg);
    REQUIRE(a.report.total == b.report.total);
    REQUIRE(a.report.ci95_halfwidth.value() == b.report.ci95_halfwidth.value());
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(a.final_state.queues[i] == b.final_state.queues[i]);
        REQUIRE(a.pairs[i].arrival_rate == b.pairs[i].arrival_rate);
    }
}

TEST_CASE("max-max on a source-starved system drains its buffers") {
    // departure capacity far above arrivals: delivered tracks arrivals
    SimConfig cfg;
    cfg.system = SystemConfig::rayleigh({1.0, 1.0}, {20.0, 20.0});
    cfg.policy = Policy::max_max();
    cfg.n_slots = 200000;
    cfg.warmup_slots = 20000;
    cfg.seed = 8;
    const auto result = run(cfg);
    double arrivals = 0.0, se2 = 0.0;
    for (const auto& p : result.pairs) {
        arrivals += p.arrival_rate;
        se2 += p.gap_se * p.gap_se;
    }
    REQUIRE(std::abs(result.report.total - arrivals) <= 3.0 * std::sqrt(se2) + 1e-9);
}

TEST_CASE("max-max with oversupplied sources grows every queue") {
    SimConfig cfg;
    cfg.system = SystemConfig::rayleigh({10.0, 10.0}, {1.0, 1.0});
    cfg.policy = Policy::max_max();
    cfg.n_slots = 100000;
    cfg.warmup_slots = 10000;
    cfg.seed = 21;
    const auto result = run(cfg);
    const auto gaps = empirical_balance(result);
    REQUIRE(gaps[0] > 0.05);
    REQUIRE(gaps[1] > 0.05);
}

TEST_CASE("solved weights keep queues stationary") {
    const auto sys = SystemConfig::rayleigh({7.0, 3.0}, {4.0, 6.0});
    const auto w = solve_lambda(sys);
    SimConfig cfg;
    cfg.system = sys;
    cfg.policy = Policy::optimal_weighted(w, MetricKind::LogCapacity);
    cfg.n_slots = 400000;
    cfg.warmup_slots = 0;
    cfg.seed = 99;
    const auto result = run(cfg);
    const double t = static_cast<double>(cfg.n_slots);
    for (double q : result.final_state.queues)
        REQUIRE(q / t <= 0.01);
    const auto gaps = empirical_balance(result);
    for (std::size_t i = 0; i < 2; ++i)
        REQUIRE(std::abs(gaps[i]) <= 3.0 * result.pairs[i].gap_se + 1e-9);
}

TEST_CASE("uniform random single pair cannot beat the link capacity") {
    const auto sys = SystemConfig::rayleigh({4.0, 4.0}, {4.0, 4.0});
    SimConfig cfg;
    cfg.system = sys;
    cfg.policy = Policy::uniform_random();
    cfg.n_slots = 100000;
    cfg.warmup_slots = 10000;
    cfg.seed = 2;
    const auto result = run(cfg);
    const double cap = ergodic_capacity(sys.dest_dists[0]) + ergodic_capacity(sys.dest_dists[1]);
    REQUIRE(result.report.total < cap);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.system = SystemConfig::rayleigh({1.0}, {1.0});
    cfg.policy = Policy::max_max();
    cfg.n_slots = 100;
    cfg.warmup_slots = 100;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.warmup_slots = 10;
    cfg.prefill_bits = -1.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.prefill_bits = 0.0;
    cfg.policy = Policy::optimal_weighted(WeightVector({-0.5, -0.5}), MetricKind::Linear);
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("prefill enters the conservation identity") {
    SimConfig cfg;
    cfg.system = SystemConfig::rayleigh({3.0, 3.0}, {3.0, 3.0});
    cfg.policy = Policy::max_max();
    cfg.n_slots = 5000;
    cfg.warmup_slots = 100;
    cfg.prefill_bits = 50.0;
    cfg.seed = 10;
    const auto result = run(cfg);
    for (int i = 0; i < 2; ++i) {
        const double recon = cfg.prefill_bits + result.final_state.arrived_bits[i] -
                             result.final_state.delivered_bits[i];
        REQUIRE(result.final_state.queues[i] == Catch::Approx(recon).epsilon(1e-9));
    }
}
