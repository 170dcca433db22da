#pragma once

#include <cmath>
#include <stdexcept>

namespace relaysched {

// Scheduling metric applied to instantaneous SNRs. LogCapacity scores a
// link by its capacity log2(1+x); Linear scores by the raw SNR and is the
// cheap approximation used by the sub-optimal scheme.
enum class MetricKind {
    LogCapacity,
    Linear,
};

inline double metric_eval(MetricKind kind, double x) {
    if (!(x >= 0.0))
        throw std::domain_error("metric_eval: x must be a nonnegative number");
    if (kind == MetricKind::LogCapacity)
        return std::log1p(x) * 1.4426950408889634; // log2(1+x)
    return x;
}

// Inverse of metric_eval; for LogCapacity this is 2^y - 1.
inline double metric_inverse(MetricKind kind, double y) {
    if (!(y >= 0.0))
        throw std::domain_error("metric_inverse: y must be a nonnegative number");
    if (kind == MetricKind::LogCapacity)
        return std::expm1(y * 0.6931471805599453); // 2^y - 1
    return y;
}

} // namespace relaysched
