#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mrl/errors.hpp"

namespace mrl {

// Poisson smoothing operator configuration: the smoothing rate lambda
// (units 1/time), the admissible truncation mass, and a hard cap on the
// number of retained probability terms.
struct PoissonSmoother {
    double lambda = 1.0;
    double tail_epsilon = 1e-12;
    std::size_t max_terms = 10'000'000;

    PoissonSmoother() = default;
    explicit PoissonSmoother(double lambda_, double tail_epsilon_ = 1e-12,
                             std::size_t max_terms_ = 10'000'000)
        : lambda(lambda_), tail_epsilon(tail_epsilon_), max_terms(max_terms_) {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw error("smoothing rate lambda must be positive and finite");
        if (!(tail_epsilon > 0.0) || tail_epsilon > 1e-9)
            throw error("tail_epsilon must lie in (0, 1e-9]");
        if (max_terms < 1) throw error("max_terms must be at least 1");
    }
};

namespace detail {

// Compensated accumulator; keeps long Poisson-weighted sums accurate to a
// few ulp independent of term count.
struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

// log(n!) - [n log n - n + 0.5 log(2 pi n)], the Stirling remainder.
// Series form, valid to ~1e-16 relative for n >= 16.
inline double stirling_remainder(double n) {
    const double n2 = n * n;
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * n2)) / n2) / n2) / n2) / n;
}

// p_{k*}(mu) at the mode k* = floor(mu), without forming the huge
// cancelling logs -mu + k log mu - lgamma(k+1) directly. Requires mu > 30
// (so k* >= 16 and the Stirling series applies).
inline double poisson_pmf_mode(double mu) {
    const double k = std::floor(mu);
    const double d = mu - k;  // in [0, 1)
    // -mu + k log(mu) - log(k!)
    //   = [k log1p(d/k) - d] - stirling_remainder(k) - 0.5 log(2 pi k)
    const double log_ratio = k * std::log1p(d / k) - d;  // ~ -d^2/(2k), tiny
    const double log_p = log_ratio - stirling_remainder(k)
                         - 0.5 * std::log(2.0 * 3.14159265358979323846 * k);
    return std::exp(log_p);
}

}  // namespace detail

// Contiguous block of Poisson probabilities p_first .. p_{first+pmf.size()-1}
// for a fixed mean; the mass outside the block is below the requested
// truncation bound.
struct PoissonWindow {
    std::size_t first = 0;
    std::vector<double> pmf;

    std::size_t last() const { return first + pmf.size() - 1; }
    double at(std::size_t k) const {
        if (k < first || k > last()) return 0.0;
        return pmf[k - first];
    }
};

// Poisson probabilities around the mode of a Poisson(mu) distribution,
// covering all indices whose total excluded mass is below tail_epsilon.
// Stable for mu up to 1e7: the mode term is evaluated by a Stirling-series
// saddle-point formula and neighbours by the two ratio recurrences, so no
// intermediate value over- or underflows.
inline PoissonWindow poisson_window(double mu, double tail_epsilon = 1e-12,
                                    std::size_t max_terms = 10'000'000) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw error("poisson mean must be finite and >= 0");
    PoissonWindow w;
    if (mu == 0.0) {
        w.first = 0;
        w.pmf = {1.0};
        return w;
    }
    // Chernoff-style half-width: P(|X - mu| > c sqrt(mu+1)) < tail_epsilon.
    const double c = std::sqrt(2.0 * std::log(2.0 / tail_epsilon)) + 1.0;
    const double half = c * std::sqrt(mu + 1.0) + 8.0;

    if (mu <= 30.0) {
        // Upward recurrence from p_0 = e^{-mu}; no underflow in this range.
        const std::size_t k_hi = static_cast<std::size_t>(mu + half);
        w.first = 0;
        w.pmf.resize(std::min<std::size_t>(k_hi + 1, max_terms));
        double p = std::exp(-mu);
        for (std::size_t k = 0; k < w.pmf.size(); ++k) {
            w.pmf[k] = p;
            p *= mu / static_cast<double>(k + 1);
        }
        return w;
    }

    const double k_mode_d = std::floor(mu);
    const std::size_t k_mode = static_cast<std::size_t>(k_mode_d);
    std::size_t k_lo = (mu - half > 0.0) ? static_cast<std::size_t>(mu - half) : 0;
    std::size_t k_hi = static_cast<std::size_t>(mu + half);
    if (k_hi - k_lo + 1 > max_terms) {  // cap, keeping the window centred
        const std::size_t budget = max_terms / 2;
        k_lo = (k_mode > budget) ? k_mode - budget : 0;
        k_hi = k_mode + budget;
    }

    const double p_mode = detail::poisson_pmf_mode(mu);
    w.first = k_lo;
    w.pmf.assign(k_hi - k_lo + 1, 0.0);
    w.pmf[k_mode - k_lo] = p_mode;
    double p = p_mode;
    for (std::size_t k = k_mode; k > k_lo; --k) {  // downward: p_{k-1} = p_k * k / mu
        p *= static_cast<double>(k) / mu;
        w.pmf[k - 1 - k_lo] = p;
    }
    p = p_mode;
    for (std::size_t k = k_mode; k < k_hi; ++k) {  // upward: p_{k+1} = p_k * mu / (k+1)
        p *= mu / static_cast<double>(k + 1);
        w.pmf[k + 1 - k_lo] = p;
    }
    return w;
}

// Dense Poisson probabilities p_0..p_k_max for mean mu. Entries whose
// excluded mass is below tail_epsilon are 0.
inline std::vector<double> poisson_weights(double mu, std::size_t k_max,
                                           double tail_epsilon = 1e-12,
                                           std::size_t max_terms = 10'000'000) {
    const PoissonWindow w = poisson_window(mu, tail_epsilon, max_terms);
    std::vector<double> out(k_max + 1, 0.0);
    const std::size_t lo = std::max(w.first, std::size_t{0});
    const std::size_t hi = std::min(w.last(), k_max);
    for (std::size_t k = lo; k <= hi && k >= lo; ++k) out[k] = w.at(k);
    return out;
}

// Lower Poisson CDF P_k(mu) = sum_{r<=k} p_r(mu), truncation-consistent with
// poisson_window.
inline double poisson_cdf(double mu, std::size_t k, double tail_epsilon = 1e-12,
                          std::size_t max_terms = 10'000'000) {
    const PoissonWindow w = poisson_window(mu, tail_epsilon, max_terms);
    if (k < w.first) return 0.0;
    if (k >= w.last()) return 1.0;
    detail::KahanSum acc;
    for (std::size_t r = w.first; r <= k; ++r) acc.add(w.pmf[r - w.first]);
    return std::min(acc.value(), 1.0);
}

// How values beyond the supplied grid are treated by smooth().
enum class GridExtension {
    none,  // error if the smoothing window needs an index past the grid
    zero   // grid function vanishes past its last index (finite support)
};

// Hille smoothing operator: maps the grid function u(k/lambda),
// k = 0..K, to  sum_k u(k/lambda) p_k(lambda t)  at the requested t, with
// the sum truncated where the remaining Poisson mass is below tail_epsilon.
inline double smooth(const PoissonSmoother& sm, std::span<const double> grid_values,
                     double t, GridExtension ext = GridExtension::none) {
    if (grid_values.empty()) throw grid_too_short_error(0, 0);
    if (!(t >= 0.0)) throw error("smoothing abscissa t must be >= 0");
    const double mu = sm.lambda * t;
    const PoissonWindow w = poisson_window(mu, sm.tail_epsilon, sm.max_terms);
    if (ext == GridExtension::none && w.last() >= grid_values.size())
        throw grid_too_short_error(w.last(), grid_values.size());
    const std::size_t hi = std::min(w.last(), grid_values.size() - 1);
    detail::KahanSum acc;
    for (std::size_t k = w.first; k <= hi; ++k)
        acc.add(grid_values[k] * w.pmf[k - w.first]);
    return acc.value();
}

// Exact tail integral of a Poisson weight: integrating p_k(lambda y) over
// [t, infinity) collapses to the lower CDF,
//   int_t^inf p_k(lambda y) dy = (1/lambda) sum_{r<=k} p_r(lambda t).
inline double tail_integral_weights(const PoissonSmoother& sm, std::size_t k, double t) {
    if (!(t >= 0.0)) throw error("tail integral abscissa t must be >= 0");
    return poisson_cdf(sm.lambda * t, k, sm.tail_epsilon, sm.max_terms) / sm.lambda;
}

}  // namespace mrl
