#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "relaysched/policy.hpp"
#include "relaysched/random.hpp"
#include "relaysched/report.hpp"
#include "relaysched/system.hpp"

namespace relaysched {

// Buffer queues and cumulative counters of one simulation.
struct SimState {
    std::vector<double> queues;         // Q_i(t), bits
    std::vector<double> arrived_bits;   // cumulative sum of p_i R_{s_i}
    std::vector<double> delivered_bits; // cumulative sum of q_i R_{r_i}
    std::vector<std::uint64_t> empty_hit_count; // slots where min{Q, C} bound by Q
    std::uint64_t slot = 0;

    explicit SimState(std::size_t n_pairs, double prefill_bits = 0.0)
        : queues(n_pairs, prefill_bits),
          arrived_bits(n_pairs, 0.0),
          delivered_bits(n_pairs, 0.0),
          empty_hit_count(n_pairs, 0) {}
};

struct SimConfig {
    SystemConfig system;
    Policy policy;
    std::uint64_t n_slots = 1'000'000;
    std::uint64_t warmup_slots = 100'000;
    std::uint64_t seed = 0;
    double prefill_bits = 0.0;

    void validate() const {
        system.validate();
        if (n_slots < 1)
            throw std::invalid_argument("SimConfig: n_slots must be >= 1");
        if (warmup_slots >= n_slots)
            throw std::invalid_argument("SimConfig: warmup_slots must be < n_slots");
        if (!(prefill_bits >= 0.0))
            throw std::invalid_argument("SimConfig: prefill_bits must be >= 0");
        if (policy.kind == PolicyKind::OptimalWeighted &&
            policy.weights.size() != system.n_pairs)
            throw std::invalid_argument("SimConfig: weight vector length != n_pairs");
    }
};

struct StepOutcome {
    Decision decision;
    double arrival_bits = 0.0;   // R_{s_k} added to the selected source's buffer
    double departure_bits = 0.0; // R_{r_m} = min{Q, C_r} removed from the selected dest's buffer
};

namespace detail {

// Draws the slot's SNR snapshot with counter-based addressing: draw k of
// slot t sits at counter t * (2N + 2) + k, so every (link, slot) pair has
// a fixed position in the stream regardless of how earlier slots consumed it.
inline void sample_snapshot(const SystemConfig& system, std::uint64_t slot,
                            RandomStream& rng, SnrSnapshot& snap) {
    const std::size_t n = system.n_pairs;
    const std::uint64_t stride = 2 * static_cast<std::uint64_t>(n) + 2;
    rng.set_counter(slot * stride);
    for (std::size_t i = 0; i < n; ++i)
        snap.source_snrs[i] = system.source_dists[i].sample(rng);
    for (std::size_t i = 0; i < n; ++i)
        snap.dest_snrs[i] = system.dest_dists[i].sample(rng);
}

} // namespace detail

// Advances the simulation by one slot: sample fading, schedule, move bits.
// The selected destination transmits min{Q(t-1), C_r} out of its buffer;
// the arrival is applied afterwards, so a pair selected on both sides in
// the same slot serves the previous slot's backlog.
inline StepOutcome step(SimState& state, const SimConfig& config, RandomStream& rng) {
    SnrSnapshot snap;
    snap.source_snrs.resize(config.system.n_pairs);
    snap.dest_snrs.resize(config.system.n_pairs);
    detail::sample_snapshot(config.system, state.slot, rng, snap);
    const Decision d = decide(config.policy, snap, rng);

    StepOutcome out;
    out.decision = d;

    const std::size_t m = d.dest_index;
    const double cap_out = std::log2(1.0 + snap.dest_snrs[m]);
    out.departure_bits = std::min(state.queues[m], cap_out);
    if (state.queues[m] < cap_out)
        ++state.empty_hit_count[m];
    state.queues[m] -= out.departure_bits;
    state.delivered_bits[m] += out.departure_bits;

    const std::size_t k = d.source_index;
    out.arrival_bits = std::log2(1.0 + snap.source_snrs[k]);
    state.queues[k] += out.arrival_bits;
    state.arrived_bits[k] += out.arrival_bits;

    ++state.slot;
    return out;
}

// Per-pair empirical rates over the measured window.
struct PairRateStats {
    double arrival_rate = 0.0;   // mean of p_i R_{s_i}, bits/slot
    double departure_rate = 0.0; // mean of q_i R_{r_i}, bits/slot
    double gap_se = 0.0;         // batch-means SE of (arrival - departure)
    double departure_se = 0.0;   // batch-means SE of the departure rate
    std::uint64_t source_selected = 0;
    std::uint64_t dest_selected = 0;
};

struct RunResult {
    ThroughputReport report; // Monte Carlo: total departure rate + ci95
    std::vector<PairRateStats> pairs;
    SimState final_state;
    std::uint64_t measured_slots = 0;
    std::uint64_t batch_count = 0;

    RunResult() : final_state(1) {}
};

namespace detail {

// two-sided 97.5% Student-t quantiles for dof 1..30; dof > 30 ~ normal
inline constexpr std::array<double, 30> kT975{
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
    2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
    2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};

inline double t975(std::uint64_t dof) {
    if (dof == 0)
        return 0.0;
    if (dof <= 30)
        return kT975[dof - 1];
    return 1.96;
}

inline double batch_se(const std::vector<double>& batch_means) {
    const std::size_t b = batch_means.size();
    if (b < 2)
        return 0.0;
    double mean = 0.0;
    for (double v : batch_means)
        mean += v;
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (double v : batch_means)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(b - 1);
    return std::sqrt(var / static_cast<double>(b));
}

} // namespace detail

// Runs the full horizon. Rates are measured over up to 30 equal batches of
// the post-warmup window (trailing remainder slots are simulated but not
// measured); the ci95 half-width is Student-t on the batch means, which
// tolerates the autocorrelation of the queue process. Deterministic in seed.
inline RunResult run(const SimConfig& config) {
    config.validate();
    const std::size_t n = config.system.n_pairs;
    RunResult result;
    result.final_state = SimState(n, config.prefill_bits);
    RandomStream rng(config.seed);

    const std::uint64_t window = config.n_slots - config.warmup_slots;
    const std::uint64_t n_batches = std::min<std::uint64_t>(30, window);
    const std::uint64_t batch_len = window / n_batches;
    const std::uint64_t measured = n_batches * batch_len;

    // [batch][pair] accumulated bits
    std::vector<std::vector<double>> arr(n_batches, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> dep(n_batches, std::vector<double>(n, 0.0));
    result.pairs.assign(n, {});

    SimState& state = result.final_state;
    for (std::uint64_t t = 0; t < config.n_slots; ++t) {
        const StepOutcome out = step(state, config, rng);
        if (t < config.warmup_slots || t >= config.warmup_slots + measured)
            continue;
        const std::uint64_t b = (t - config.warmup_slots) / batch_len;
        arr[b][out.decision.source_index] += out.arrival_bits;
        dep[b][out.decision.dest_index] += out.departure_bits;
        ++result.pairs[out.decision.source_index].source_selected;
        ++result.pairs[out.decision.dest_index].dest_selected;
    }

    result.measured_slots = measured;
    result.batch_count = n_batches;

    const double slots = static_cast<double>(measured);
    const double bl = static_cast<double>(batch_len);
    std::vector<double> total_batch(n_batches, 0.0);
    std::vector<double> scratch(n_batches);
    result.report.method = ReportMethod::MonteCarlo;
    result.report.per_pair.assign(n, 0.0);
    result.report.total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a_sum = 0.0, d_sum = 0.0;
        for (std::uint64_t b = 0; b < n_batches; ++b) {
            a_sum += arr[b][i];
            d_sum += dep[b][i];
            total_batch[b] += dep[b][i] / bl;
        }
        result.pairs[i].arrival_rate = a_sum / slots;
        result.pairs[i].departure_rate = d_sum / slots;
        for (std::uint64_t b = 0; b < n_batches; ++b)
            scratch[b] = (arr[b][i] - dep[b][i]) / bl;
        result.pairs[i].gap_se = detail::batch_se(scratch);
        for (std::uint64_t b = 0; b < n_batches; ++b)
            scratch[b] = dep[b][i] / bl;
        result.pairs[i].departure_se = detail::batch_se(scratch);
        result.report.per_pair[i] = result.pairs[i].departure_rate;
        result.report.total += result.pairs[i].departure_rate;
    }
    result.report.ci95_halfwidth =
        detail::t975(n_batches - 1) * detail::batch_se(total_batch);
    return result;
}

// Per-pair signed rate gaps (arrival - departure) over the measured window.
// Zero gaps mean the buffers sit at the edge of the non-absorbing state.
inline std::vector<double> empirical_balance(const RunResult& result) {
    std::vector<double> gaps(result.pairs.size());
    for (std::size_t i = 0; i < gaps.size(); ++i)
        gaps[i] = result.pairs[i].arrival_rate - result.pairs[i].departure_rate;
    return gaps;
}

} // namespace relaysched
