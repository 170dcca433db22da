#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "relaysched/fading.hpp"
#include "relaysched/metric.hpp"

namespace relaysched {

// The N-pair relay system: one distribution per source link (S_i - R) and
// one per destination link (R - D_i), plus the scheduling metric.
struct SystemConfig {
    std::size_t n_pairs = 0;
    std::vector<LinkDistribution> source_dists;
    std::vector<LinkDistribution> dest_dists;
    MetricKind metric = MetricKind::LogCapacity;

    SystemConfig() = default;
    SystemConfig(std::vector<LinkDistribution> sources,
                 std::vector<LinkDistribution> dests,
                 MetricKind m = MetricKind::LogCapacity)
        : n_pairs(sources.size()),
          source_dists(std::move(sources)),
          dest_dists(std::move(dests)),
          metric(m) {
        validate();
    }

    // All-Rayleigh shorthand from the mean SNR vectors.
    static SystemConfig rayleigh(const std::vector<double>& source_means,
                                 const std::vector<double>& dest_means,
                                 MetricKind m = MetricKind::LogCapacity) {
        std::vector<LinkDistribution> s, d;
        s.reserve(source_means.size());
        d.reserve(dest_means.size());
        for (double om : source_means)
            s.push_back(LinkDistribution::rayleigh_snr(om));
        for (double om : dest_means)
            d.push_back(LinkDistribution::rayleigh_snr(om));
        return SystemConfig(std::move(s), std::move(d), m);
    }

    SystemConfig with_metric(MetricKind m) const {
        SystemConfig c = *this;
        c.metric = m;
        return c;
    }

    void validate() const {
        if (n_pairs < 1)
            throw std::invalid_argument("SystemConfig: n_pairs must be >= 1");
        if (source_dists.size() != n_pairs || dest_dists.size() != n_pairs)
            throw std::invalid_argument("SystemConfig: distribution vectors must have n_pairs entries");
    }

    bool all_continuous() const noexcept {
        for (const auto& d : source_dists)
            if (!d.is_continuous())
                return false;
        for (const auto& d : dest_dists)
            if (!d.is_continuous())
                return false;
        return true;
    }

    bool all_discrete() const noexcept {
        for (const auto& d : source_dists)
            if (d.is_continuous())
                return false;
        for (const auto& d : dest_dists)
            if (d.is_continuous())
                return false;
        return true;
    }
};

} // namespace relaysched
