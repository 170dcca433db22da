#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "relaysched/fading.hpp"
#include "relaysched/metric.hpp"
#include "relaysched/random.hpp"

namespace relaysched {

// The per-pair weighted factors lambda_i coupling source and destination
// selection. Each lambda_i must lie strictly inside (-1, 0): at -1 the
// pair's destination is never served, at 0 its source is never scheduled.
struct WeightVector {
    std::vector<double> lambdas;

    WeightVector() = default;
    explicit WeightVector(std::vector<double> values) : lambdas(std::move(values)) {
        validate();
    }

    std::size_t size() const noexcept { return lambdas.size(); }
    double operator[](std::size_t i) const { return lambdas[i]; }

    void validate() const {
        if (lambdas.empty())
            throw std::invalid_argument("WeightVector: must not be empty");
        for (double l : lambdas)
            if (!(l > -1.0) || !(l < 0.0))
                throw std::invalid_argument("WeightVector: every lambda must lie in (-1, 0)");
    }
};

// One slot's scheduling outcome: exactly one source and one destination.
struct Decision {
    std::size_t source_index = 0;
    std::size_t dest_index = 0;

    friend bool operator==(const Decision&, const Decision&) = default;
};

enum class PolicyKind {
    OptimalWeighted, // argmax of the weighted decision functions
    MaxMax,          // strongest source link and strongest destination link
    UniformRandom,   // sanity-floor baseline
};

struct Policy {
    PolicyKind kind = PolicyKind::MaxMax;
    WeightVector weights;                       // OptimalWeighted only
    MetricKind metric = MetricKind::LogCapacity; // OptimalWeighted only

    static Policy optimal_weighted(WeightVector w, MetricKind m) {
        w.validate();
        return Policy{PolicyKind::OptimalWeighted, std::move(w), m};
    }
    static Policy max_max() { return Policy{PolicyKind::MaxMax, {}, MetricKind::LogCapacity}; }
    static Policy uniform_random() {
        return Policy{PolicyKind::UniformRandom, {}, MetricKind::LogCapacity};
    }
};

// Source-side decision values Gamma_i = -lambda_i * F(s_i).
inline std::vector<double> source_decision_values(const SnrSnapshot& snapshot,
                                                  const WeightVector& weights,
                                                  MetricKind kind) {
    if (snapshot.source_snrs.size() != weights.size())
        throw std::invalid_argument("source_decision_values: length mismatch");
    std::vector<double> values(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        values[i] = -weights[i] * metric_eval(kind, snapshot.source_snrs[i]);
    return values;
}

// Destination-side decision values Lambda_i = (1 + lambda_i) * F(r_i).
inline std::vector<double> dest_decision_values(const SnrSnapshot& snapshot,
                                                const WeightVector& weights,
                                                MetricKind kind) {
    if (snapshot.dest_snrs.size() != weights.size())
        throw std::invalid_argument("dest_decision_values: length mismatch");
    std::vector<double> values(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        values[i] = (1.0 + weights[i]) * metric_eval(kind, snapshot.dest_snrs[i]);
    return values;
}

namespace detail {

// Ties break to the lowest index; max_element keeps the first maximum.
inline std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace detail

// Picks the slot's source and destination. Source and destination are
// selected independently; the same pair index may win both. Only
// UniformRandom consumes the stream.
inline Decision decide(const Policy& policy, const SnrSnapshot& snapshot,
                       RandomStream& rng) {
    const std::size_t n = snapshot.n_pairs();
    if (n == 0 || snapshot.dest_snrs.size() != n)
        throw std::invalid_argument("decide: malformed snapshot");
    switch (policy.kind) {
    case PolicyKind::OptimalWeighted: {
        const auto gamma = source_decision_values(snapshot, policy.weights, policy.metric);
        const auto lambda = dest_decision_values(snapshot, policy.weights, policy.metric);
        return {detail::argmax(gamma), detail::argmax(lambda)};
    }
    case PolicyKind::MaxMax:
        return {detail::argmax(snapshot.source_snrs), detail::argmax(snapshot.dest_snrs)};
    case PolicyKind::UniformRandom:
        return {rng.next_index(n), rng.next_index(n)};
    }
    throw std::logic_error("decide: unknown policy kind");
}

} // namespace relaysched
