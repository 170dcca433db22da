#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relaysched/random.hpp"

namespace relaysched {

// Thrown when an operation is not defined for a distribution family
// (e.g. pdf of a discrete grid).
class UnsupportedOperation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class FadingFamily {
    RayleighSnr,  // SNR of a Rayleigh-faded link: exponential with mean Omega
    DiscreteGrid, // finite support; used for exact enumeration oracles
};

// Per-link distribution of the instantaneous SNR. Immutable after
// construction and safe to share across threads.
class LinkDistribution {
public:
    static LinkDistribution rayleigh_snr(double mean_snr) {
        if (!(mean_snr > 0.0) || !std::isfinite(mean_snr))
            throw std::invalid_argument("rayleigh_snr: mean_snr must be positive and finite");
        LinkDistribution d;
        d.family_ = FadingFamily::RayleighSnr;
        d.mean_ = mean_snr;
        return d;
    }

    static LinkDistribution discrete_grid(std::vector<double> support,
                                          std::vector<double> probs) {
        if (support.empty() || support.size() != probs.size())
            throw std::invalid_argument("discrete_grid: support/probs must be nonempty and equal length");
        double sum = 0.0;
        for (std::size_t k = 0; k < support.size(); ++k) {
            if (!(support[k] >= 0.0) || !std::isfinite(support[k]))
                throw std::invalid_argument("discrete_grid: support points must be nonnegative and finite");
            if (k > 0 && !(support[k] > support[k - 1]))
                throw std::invalid_argument("discrete_grid: support points must be strictly increasing");
            if (!(probs[k] >= 0.0))
                throw std::invalid_argument("discrete_grid: probabilities must be nonnegative");
            sum += probs[k];
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("discrete_grid: probabilities must sum to 1 (got " +
                                        std::to_string(sum) + ")");
        LinkDistribution d;
        d.family_ = FadingFamily::DiscreteGrid;
        d.support_ = std::move(support);
        d.probs_ = std::move(probs);
        d.mean_ = std::inner_product(d.support_.begin(), d.support_.end(),
                                     d.probs_.begin(), 0.0);
        return d;
    }

    FadingFamily family() const noexcept { return family_; }

    // E{X}; the Omega of a Rayleigh link, dot(support, probs) of a grid.
    double mean_snr() const noexcept { return mean_; }

    bool is_continuous() const noexcept { return family_ == FadingFamily::RayleighSnr; }

    const std::vector<double>& support() const {
        require_discrete("support");
        return support_;
    }
    const std::vector<double>& probabilities() const {
        require_discrete("probabilities");
        return probs_;
    }

    double pdf(double x) const {
        if (family_ == FadingFamily::DiscreteGrid)
            throw UnsupportedOperation("pdf: not defined for DiscreteGrid");
        if (std::isnan(x))
            throw std::invalid_argument("pdf: x is NaN");
        if (x < 0.0)
            return 0.0;
        return std::exp(-x / mean_) / mean_;
    }

    double cdf(double x) const {
        if (std::isnan(x))
            throw std::invalid_argument("cdf: x is NaN");
        if (family_ == FadingFamily::RayleighSnr) {
            if (x <= 0.0)
                return 0.0;
            return -std::expm1(-x / mean_);
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < support_.size() && support_[k] <= x; ++k)
            acc += probs_[k];
        return acc;
    }

    // One draw per call; consumes exactly one uniform from the stream.
    double sample(RandomStream& rng) const {
        const double u = rng.next_unit();
        if (family_ == FadingFamily::RayleighSnr)
            return -mean_ * std::log1p(-u);
        double acc = 0.0;
        for (std::size_t k = 0; k < support_.size(); ++k) {
            acc += probs_[k];
            if (u < acc)
                return support_[k];
        }
        return support_.back();
    }

private:
    LinkDistribution() = default;

    void require_discrete(const char* what) const {
        if (family_ != FadingFamily::DiscreteGrid)
            throw UnsupportedOperation(std::string(what) + ": only defined for DiscreteGrid");
    }

    FadingFamily family_ = FadingFamily::RayleighSnr;
    double mean_ = 1.0;
    std::vector<double> support_;
    std::vector<double> probs_;
};

// Instantaneous SNRs of all 2N links in one slot.
struct SnrSnapshot {
    std::vector<double> source_snrs; // s_i(t)
    std::vector<double> dest_snrs;   // r_i(t)

    std::size_t n_pairs() const noexcept { return source_snrs.size(); }

    void validate() const {
        if (source_snrs.size() != dest_snrs.size())
            throw std::invalid_argument("SnrSnapshot: vector lengths differ");
        for (double v : source_snrs)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("SnrSnapshot: source SNRs must be finite and nonnegative");
        for (double v : dest_snrs)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("SnrSnapshot: dest SNRs must be finite and nonnegative");
    }
};

} // namespace relaysched
