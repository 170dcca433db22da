#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relaysched/fading.hpp"
#include "relaysched/metric.hpp"
#include "relaysched/policy.hpp"
#include "relaysched/quadrature.hpp"
#include "relaysched/system.hpp"

namespace relaysched {

struct SolverSettings {
    double residual_tol = 1e-6;        // convergence: max_i |g_i| <= residual_tol
    double quad_rel_tol = 1e-8;        // relative tolerance of the rate integrals
    int max_iterations = 100;          // outer iterations of the root finder
    double lambda_bounds_margin = 1e-4; // keeps lambda inside [-1+eps, -eps]
    double discrete_grid_step = 1e-3;  // scan resolution for all-discrete systems

    void validate() const {
        if (!(residual_tol > 0.0) || !(quad_rel_tol > 0.0))
            throw std::invalid_argument("SolverSettings: tolerances must be positive");
        if (max_iterations < 1)
            throw std::invalid_argument("SolverSettings: max_iterations must be >= 1");
        if (!(lambda_bounds_margin > 0.0) || !(lambda_bounds_margin < 0.5))
            throw std::invalid_argument("SolverSettings: lambda_bounds_margin must be in (0, 0.5)");
        if (!(discrete_grid_step > 0.0) || !(discrete_grid_step < 0.5))
            throw std::invalid_argument("SolverSettings: discrete_grid_step must be in (0, 0.5)");
    }
};

// Root finding failed; carries the best iterate seen and its residual norm.
class SolveFailure : public std::runtime_error {
public:
    SolveFailure(const std::string& msg, std::vector<double> best, double norm)
        : std::runtime_error(msg), best_lambda(std::move(best)), residual_norm(norm) {}
    std::vector<double> best_lambda;
    double residual_norm;
};

// Threshold H_{s_j}^i: the largest s_j that still loses the source argmax
// to pair i at SNR s_i. F^{-1}((lambda_i / lambda_j) F(s_i)).
inline double threshold_source(std::size_t i, std::size_t j, const WeightVector& lambdas,
                               double s_i, MetricKind kind) {
    if (i == j)
        throw std::invalid_argument("threshold_source: i and j must differ");
    const double ratio = lambdas[i] / lambdas[j];
    return metric_inverse(kind, ratio * metric_eval(kind, s_i));
}

// Destination-side analogue with ratio (1 + lambda_i) / (1 + lambda_j).
inline double threshold_dest(std::size_t i, std::size_t j, const WeightVector& lambdas,
                             double r_i, MetricKind kind) {
    if (i == j)
        throw std::invalid_argument("threshold_dest: i and j must differ");
    const double ratio = (1.0 + lambdas[i]) / (1.0 + lambdas[j]);
    return metric_inverse(kind, ratio * metric_eval(kind, r_i));
}

namespace detail {

inline bool side_all_continuous(const std::vector<LinkDistribution>& dists) {
    return std::all_of(dists.begin(), dists.end(),
                       [](const LinkDistribution& d) { return d.is_continuous(); });
}

inline bool side_all_discrete(const std::vector<LinkDistribution>& dists) {
    return std::none_of(dists.begin(), dists.end(),
                        [](const LinkDistribution& d) { return d.is_continuous(); });
}

// Precomputed per-side tables for exact enumeration over discrete grids.
struct DiscreteSide {
    // per pair: metric values, capacities and probabilities on the support
    std::vector<std::vector<double>> metric_vals;
    std::vector<std::vector<double>> caps;
    std::vector<std::vector<double>> probs;

    DiscreteSide(const std::vector<LinkDistribution>& dists, MetricKind kind) {
        for (const auto& d : dists) {
            const auto& sup = d.support();
            std::vector<double> f(sup.size()), c(sup.size());
            for (std::size_t k = 0; k < sup.size(); ++k) {
                f[k] = metric_eval(kind, sup[k]);
                c[k] = std::log2(1.0 + sup[k]);
            }
            metric_vals.push_back(std::move(f));
            caps.push_back(std::move(c));
            probs.push_back(d.probabilities());
        }
    }

    // E{ rate of pair i | pair i wins the argmax of w_i * F(x_i) }, summed
    // over the joint support. Ties go to the lowest index, matching decide().
    void rates(const std::vector<double>& side_weights, std::vector<double>& out) const {
        const std::size_t n = probs.size();
        out.assign(n, 0.0);
        std::vector<std::size_t> state(n, 0);
        for (;;) {
            double p = 1.0;
            double best = -1.0;
            std::size_t winner = 0;
            for (std::size_t i = 0; i < n; ++i) {
                p *= probs[i][state[i]];
                const double score = side_weights[i] * metric_vals[i][state[i]];
                if (score > best) {
                    best = score;
                    winner = i;
                }
            }
            out[winner] += p * caps[winner][state[winner]];
            // odometer over the joint support
            std::size_t k = 0;
            while (k < n && ++state[k] == probs[k].size()) {
                state[k] = 0;
                ++k;
            }
            if (k == n)
                break;
        }
    }
};

} // namespace detail

// E{p_i(t) C_{s_i}(t)}: the average rate arriving into buffer i under the
// weighted argmax policy. Continuous systems integrate
//   [prod_{j != i} cdf_{s_j}(H_{s_j}^i)] * log2(1+s) * pdf_{s_i}(s)
// over s in [0, inf); all-discrete systems sum the joint support exactly.
inline double expected_side_rate(std::size_t i, const WeightVector& lambdas,
                                 const std::vector<LinkDistribution>& dists,
                                 bool source_side, MetricKind kind,
                                 const SolverSettings& settings) {
    const std::size_t n = dists.size();
    if (lambdas.size() != n)
        throw std::invalid_argument("expected rate: lambda/system size mismatch");
    if (i >= n)
        throw std::invalid_argument("expected rate: pair index out of range");

    if (detail::side_all_discrete(dists)) {
        std::vector<double> weights(n);
        for (std::size_t k = 0; k < n; ++k)
            weights[k] = source_side ? -lambdas[k] : 1.0 + lambdas[k];
        detail::DiscreteSide side(dists, kind);
        std::vector<double> rates;
        side.rates(weights, rates);
        return rates[i];
    }
    if (!detail::side_all_continuous(dists))
        throw UnsupportedOperation("expected rate: mixed continuous/discrete sides are not supported");

    const double mean_i = dists[i].mean_snr();
    const double upper = mean_i * std::max(50.0, std::log(10.0 / settings.quad_rel_tol) + 10.0);
    auto integrand = [&](double x) {
        double prod = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const double h = source_side ? threshold_source(i, j, lambdas, x, kind)
                                         : threshold_dest(i, j, lambdas, x, kind);
            prod *= dists[j].cdf(h);
        }
        return prod * std::log2(1.0 + x) * dists[i].pdf(x);
    };
    const auto result =
        integrate_adaptive(integrand, 0.0, upper, settings.quad_rel_tol, 1e-12);
    if (!result.converged)
        throw QuadratureFailure("expected rate: quadrature did not converge", result.value);
    return result.value;
}

inline double expected_source_rate(std::size_t i, const WeightVector& lambdas,
                                   const SystemConfig& config,
                                   const SolverSettings& settings = {}) {
    return expected_side_rate(i, lambdas, config.source_dists, true, config.metric, settings);
}

inline double expected_dest_rate(std::size_t i, const WeightVector& lambdas,
                                 const SystemConfig& config,
                                 const SolverSettings& settings = {}) {
    return expected_side_rate(i, lambdas, config.dest_dists, false, config.metric, settings);
}

// g_i = E{p_i C_{s_i}} - E{q_i C_{r_i}}; the zero vector at balanced weights.
inline std::vector<double> balance_residual(const WeightVector& lambdas,
                                            const SystemConfig& config,
                                            const SolverSettings& settings = {}) {
    config.validate();
    std::vector<double> g(config.n_pairs);
    for (std::size_t i = 0; i < config.n_pairs; ++i)
        g[i] = expected_source_rate(i, lambdas, config, settings) -
               expected_dest_rate(i, lambdas, config, settings);
    return g;
}

// E{log2(1+X)} of a single link.
inline double ergodic_capacity(const LinkDistribution& dist) {
    if (dist.family() == FadingFamily::DiscreteGrid) {
        double acc = 0.0;
        const auto& sup = dist.support();
        const auto& p = dist.probabilities();
        for (std::size_t k = 0; k < sup.size(); ++k)
            acc += p[k] * std::log2(1.0 + sup[k]);
        return acc;
    }
    // log2(e) * e^{1/Omega} * E1(1/Omega)
    const double inv = 1.0 / dist.mean_snr();
    return 1.4426950408889634 * std::exp(inv) * (-std::expint(-inv));
}

namespace detail {

inline double norm_inf(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// Returns false on a (near-)singular pivot.
inline bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col]))
                piv = r;
        if (std::abs(a[piv][col]) < 1e-14)
            return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c)
                a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < n; ++c)
            acc -= a[r][c] * b[c];
        b[r] = acc / a[r][r];
    }
    return true;
}

struct ResidualFn {
    const SystemConfig& config;
    const SolverSettings& settings;
    mutable std::size_t evals = 0;

    std::vector<double> operator()(const std::vector<double>& lam) const {
        ++evals;
        return balance_residual(WeightVector(lam), config, settings);
    }
};

// Compass search on ||g||_inf. Derivative-free fallback for the
// rank-deficient directions a Newton step cannot handle.
inline bool pattern_search(const ResidualFn& fn, std::vector<double>& lam,
                           std::vector<double>& g, double lo, double hi, double tol,
                           std::size_t max_evals) {
    const std::size_t n = lam.size();
    double step = 0.05;
    double best = norm_inf(g);
    std::size_t used = 0;
    while (step > 1e-7 && used < max_evals) {
        bool improved = false;
        for (std::size_t k = 0; k < n && used < max_evals; ++k) {
            for (double dir : {+1.0, -1.0}) {
                std::vector<double> cand = lam;
                cand[k] = std::clamp(cand[k] + dir * step, lo, hi);
                if (cand[k] == lam[k])
                    continue;
                auto gc = fn(cand);
                ++used;
                const double nc = norm_inf(gc);
                if (nc < best) {
                    lam = std::move(cand);
                    g = std::move(gc);
                    best = nc;
                    improved = true;
                    if (best <= tol)
                        return true;
                    break;
                }
            }
        }
        if (!improved)
            step *= 0.5;
    }
    return best <= tol;
}

// Exhaustive lexicographic scan of the lambda grid for all-discrete
// systems, where the residual is piecewise constant and Newton has no
// gradient to work with. Returns the first grid point whose residual meets
// the tolerance; scans the full grid and throws with the best point found
// if none does.
inline WeightVector solve_discrete_grid(const SystemConfig& config,
                                        const SolverSettings& settings) {
    const std::size_t n = config.n_pairs;
    if (n != 2)
        throw UnsupportedOperation(
            "solve_lambda: all-discrete systems are solved by grid scan, implemented for N=2 only");
    const double step = settings.discrete_grid_step;
    const double lo = -1.0 + settings.lambda_bounds_margin;
    const double hi = -settings.lambda_bounds_margin;
    const long k_max = std::lround(1.0 / step);

    const detail::DiscreteSide src(config.source_dists, config.metric);
    const detail::DiscreteSide dst(config.dest_dists, config.metric);
    std::vector<double> ws(2), wd(2), rs(2), rd(2);
    auto eval_norm = [&](double l1, double l2) {
        ws[0] = -l1;
        ws[1] = -l2;
        wd[0] = 1.0 + l1;
        wd[1] = 1.0 + l2;
        src.rates(ws, rs);
        dst.rates(wd, rd);
        return std::max(std::abs(rs[0] - rd[0]), std::abs(rs[1] - rd[1]));
    };

    double best_norm = std::numeric_limits<double>::infinity();
    std::vector<double> best{-0.5, -0.5};
    for (long k1 = 1; k1 < k_max; ++k1) {
        const double l1 = -1.0 + static_cast<double>(k1) * step;
        if (l1 < lo || l1 > hi)
            continue;
        for (long k2 = 1; k2 < k_max; ++k2) {
            const double l2 = -1.0 + static_cast<double>(k2) * step;
            if (l2 < lo || l2 > hi)
                continue;
            const double norm = eval_norm(l1, l2);
            if (norm < best_norm) {
                best_norm = norm;
                best = {l1, l2};
                if (best_norm <= settings.residual_tol)
                    return WeightVector(best);
            }
        }
    }
    throw SolveFailure("solve_lambda: no grid point meets the residual tolerance "
                       "(best ||g||inf = " + std::to_string(best_norm) + ")",
                       best, best_norm);
}

} // namespace detail

// Solves the N coupled balance equations g(lambda) = 0 for the weighted
// factors, starting from the canonical lambda_i = -0.5. Levenberg-Marquardt
// damped Newton with a finite-difference Jacobian, projected into
// [-1+eps, -eps]^N. The Jacobian is structurally rank-deficient on the
// equal-weights diagonal (the residual depends only on weight ratios), so
// steps are always regularized; if the damped steps stall, a compass
// search on ||g||_inf finishes the job or reports failure.
inline WeightVector solve_lambda(const SystemConfig& config,
                                 const SolverSettings& settings = {}) {
    config.validate();
    settings.validate();
    const std::size_t n = config.n_pairs;

    if (n == 1) {
        // Nothing to solve: p_1 = q_1 = 1 regardless of lambda. Report the
        // fixed single-pair balance instead.
        const double es = ergodic_capacity(config.source_dists[0]);
        const double ed = ergodic_capacity(config.dest_dists[0]);
        const double gap = std::abs(es - ed);
        std::ostringstream msg;
        msg << "solve_lambda: N=1 systems have a lambda-independent residual; "
            << "|E{C_s} - E{C_r}| = " << gap
            << (gap <= settings.residual_tol ? " (balanced within tolerance)"
                                             : " (not balanced)");
        throw UnsupportedOperation(msg.str());
    }

    const double lo = -1.0 + settings.lambda_bounds_margin;
    const double hi = -settings.lambda_bounds_margin;
    detail::ResidualFn fn{config, settings};

    std::vector<double> lam(n, -0.5);
    std::vector<double> g = fn(lam);
    if (detail::norm_inf(g) <= settings.residual_tol)
        return WeightVector(lam);

    if (detail::side_all_discrete(config.source_dists) &&
        detail::side_all_discrete(config.dest_dists))
        return detail::solve_discrete_grid(config, settings);

    double mu = 1e-3;
    const double fd_step = 1e-6;
    std::vector<double> best_lam = lam;
    double best_norm = detail::norm_inf(g);

    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        if (detail::norm_inf(g) <= settings.residual_tol)
            return WeightVector(lam);

        // forward-difference Jacobian, stepping toward the interior
        std::vector<std::vector<double>> jac(n, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<double> pert = lam;
            const double h = (pert[k] + fd_step <= hi) ? fd_step : -fd_step;
            pert[k] += h;
            const auto gp = fn(pert);
            for (std::size_t r = 0; r < n; ++r)
                jac[r][k] = (gp[r] - g[r]) / h;
        }

        const double phi = 0.5 * std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
        bool accepted = false;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            // (J^T J + mu (diag(J^T J) + tiny)) delta = -J^T g
            std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
            std::vector<double> rhs(n, 0.0);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < n; ++k)
                        acc += jac[k][r] * jac[k][c];
                    a[r][c] = acc;
                }
            for (std::size_t r = 0; r < n; ++r) {
                a[r][r] += mu * (a[r][r] + 1e-12);
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += jac[k][r] * g[k];
                rhs[r] = -acc;
            }
            if (!detail::solve_linear(a, rhs)) {
                mu *= 10.0;
                continue;
            }
            std::vector<double> cand(n);
            bool moved = false;
            for (std::size_t k = 0; k < n; ++k) {
                cand[k] = std::clamp(lam[k] + rhs[k], lo, hi);
                moved |= cand[k] != lam[k];
            }
            if (!moved) {
                mu *= 10.0;
                continue;
            }
            auto gc = fn(cand);
            const double phic = 0.5 * std::inner_product(gc.begin(), gc.end(), gc.begin(), 0.0);
            if (phic < phi) {
                lam = std::move(cand);
                g = std::move(gc);
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
            } else {
                mu *= 10.0;
            }
        }
        if (detail::norm_inf(g) < best_norm) {
            best_norm = detail::norm_inf(g);
            best_lam = lam;
        }
        if (!accepted) {
            // damped steps stalled (flat or infeasible residual surface)
            if (detail::pattern_search(fn, lam, g, lo, hi, settings.residual_tol, 600))
                return WeightVector(lam);
            if (detail::norm_inf(g) < best_norm) {
                best_norm = detail::norm_inf(g);
                best_lam = lam;
            }
            throw SolveFailure("solve_lambda: stalled with ||g||inf = " +
                                   std::to_string(best_norm),
                               best_lam, best_norm);
        }
    }
    if (detail::norm_inf(g) <= settings.residual_tol)
        return WeightVector(lam);
    throw SolveFailure("solve_lambda: no convergence after " +
                           std::to_string(settings.max_iterations) +
                           " iterations; best ||g||inf = " + std::to_string(best_norm),
                       best_lam, best_norm);
}

} // namespace relaysched
