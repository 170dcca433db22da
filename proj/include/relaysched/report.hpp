#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace relaysched {

enum class ReportMethod {
    Analytic,
    MonteCarlo,
};

// System throughput with the per-pair reception-rate breakdown.
// total is always the sum of per_pair; ci95_halfwidth is present exactly
// for Monte Carlo estimates.
struct ThroughputReport {
    double total = 0.0;
    std::vector<double> per_pair;
    ReportMethod method = ReportMethod::Analytic;
    std::optional<double> ci95_halfwidth;

    void validate() const {
        double sum = 0.0;
        for (double v : per_pair) {
            if (!(v >= 0.0))
                throw std::logic_error("ThroughputReport: negative per-pair rate");
            sum += v;
        }
        if (std::abs(sum - total) > 1e-9 * std::max(1.0, std::abs(total)))
            throw std::logic_error("ThroughputReport: total != sum(per_pair)");
        if ((method == ReportMethod::MonteCarlo) != ci95_halfwidth.has_value())
            throw std::logic_error("ThroughputReport: ci95 present iff MonteCarlo");
    }
};

} // namespace relaysched
