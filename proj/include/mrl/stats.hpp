#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mrl/errors.hpp"

namespace mrl {

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / 1.4142135623730950488);
}

// Standard normal quantile: Acklam's rational approximation polished with
// one Halley step against erfc, accurate to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw error("normal quantile requires p in (0,1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement: e = Phi(x) - p, u = e / phi(x).
    const double e = normal_cdf(x) - p;
    const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

// Asymptotic Kolmogorov distribution K(x) = P(sup|B(t)| <= x) for the
// Brownian bridge; governs sqrt(n) * D_n under the null.
inline double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    double sum = 0.0;
    for (int j = 1; j <= 101; ++j) {
        const double term = std::exp(-2.0 * j * j * x * x);
        sum += (j % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::max(0.0, 1.0 - 2.0 * sum);
}

struct KsResult {
    double statistic = 0.0;     // D_n
    double scaled = 0.0;        // sqrt(n) * D_n
    double p_value = 1.0;       // asymptotic
};

// One-sample Kolmogorov-Smirnov test of `data` against the standard normal.
inline KsResult ks_test_standard_normal(std::vector<double> data) {
    if (data.empty()) throw empty_input_error();
    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    double d = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double cdf = normal_cdf(data[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(cdf - lo), std::abs(hi - cdf)});
    }
    KsResult r;
    r.statistic = d;
    r.scaled = std::sqrt(n) * d;
    r.p_value = 1.0 - kolmogorov_cdf(r.scaled);
    return r;
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw empty_input_error();
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Two-pass variance with selectable divisor (n or n-1).
inline double variance(std::span<const double> xs, bool unbiased = false) {
    if (xs.empty()) throw empty_input_error();
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    const double denom = static_cast<double>(xs.size()) - (unbiased ? 1.0 : 0.0);
    if (denom <= 0.0) return 0.0;
    return s / denom;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw empty_input_error();
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace mrl
