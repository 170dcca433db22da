#pragma once

#include <cstdint>
#include <vector>

#include "relaysched/report.hpp"
#include "relaysched/sim.hpp"
#include "relaysched/solver.hpp"
#include "relaysched/system.hpp"

namespace relaysched {

// Closed-form system throughput of the weighted scheme: the sum over pairs
// of the destination-side expected rates. This equals the deliverable
// throughput when lambda solves the balance equations; at other weights it
// is the departure-capacity side only.
inline ThroughputReport analytic_throughput(const WeightVector& lambdas,
                                            const SystemConfig& config,
                                            const SolverSettings& settings = {}) {
    config.validate();
    ThroughputReport report;
    report.method = ReportMethod::Analytic;
    report.per_pair.resize(config.n_pairs);
    for (std::size_t i = 0; i < config.n_pairs; ++i) {
        report.per_pair[i] = expected_dest_rate(i, lambdas, config, settings);
        report.total += report.per_pair[i];
    }
    return report;
}

// Simulated throughput of the Max-Max baseline. No closed form exists once
// the min{Q, C} limitation binds, so this is measured: buffers start empty
// and the first tenth of the horizon is discarded as warmup.
inline ThroughputReport maxmax_throughput(const SystemConfig& config,
                                          std::uint64_t n_slots, std::uint64_t seed) {
    SimConfig sim;
    sim.system = config;
    sim.policy = Policy::max_max();
    sim.n_slots = n_slots;
    sim.warmup_slots = n_slots / 10;
    sim.seed = seed;
    sim.prefill_bits = 0.0;
    return run(sim).report;
}

} // namespace relaysched
