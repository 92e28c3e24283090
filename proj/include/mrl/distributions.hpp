#pragma once

#include <cmath>
#include <limits>
#include <variant>

#include "mrl/errors.hpp"
#include "mrl/quadrature.hpp"

namespace mrl {

// Parametric laws available to the simulation harness. Rates and scales are
// validated at scenario level; the evaluators assume valid parameters.
struct ExponentialLaw {
    double rate = 1.0;  // mean 1/rate
};

struct WeibullLaw {
    double shape = 1.0;
    double scale = 1.0;
};

struct UniformLaw {
    double upper = 1.0;  // Uniform(0, upper)
};

struct NoCensoring {};

using LifetimeLaw = std::variant<ExponentialLaw, WeibullLaw, UniformLaw>;
using CensoringLaw = std::variant<NoCensoring, ExponentialLaw, UniformLaw>;

inline double survival(const ExponentialLaw& law, double x) {
    return x <= 0.0 ? 1.0 : std::exp(-law.rate * x);
}
inline double survival(const WeibullLaw& law, double x) {
    return x <= 0.0 ? 1.0 : std::exp(-std::pow(x / law.scale, law.shape));
}
inline double survival(const UniformLaw& law, double x) {
    if (x <= 0.0) return 1.0;
    if (x >= law.upper) return 0.0;
    return 1.0 - x / law.upper;
}
inline double survival(const LifetimeLaw& law, double x) {
    return std::visit([x](const auto& l) { return survival(l, x); }, law);
}

// Inverse CDF for u in [0, 1).
inline double quantile(const ExponentialLaw& law, double u) {
    return -std::log1p(-u) / law.rate;
}
inline double quantile(const WeibullLaw& law, double u) {
    return law.scale * std::pow(-std::log1p(-u), 1.0 / law.shape);
}
inline double quantile(const UniformLaw& law, double u) { return law.upper * u; }
inline double quantile(const LifetimeLaw& law, double u) {
    return std::visit([u](const auto& l) { return quantile(l, u); }, law);
}

inline double upper_support(const LifetimeLaw& law) {
    if (const auto* u = std::get_if<UniformLaw>(&law)) return u->upper;
    return std::numeric_limits<double>::infinity();
}

namespace detail {

// Cutoff beyond which exp(-(x/scale)^shape) contributes nothing at double
// precision relative to the conditioning point t.
inline double weibull_tail_cutoff(const WeibullLaw& law, double t) {
    const double base = std::pow(t / law.scale, law.shape);
    return law.scale * std::pow(base + 50.0, 1.0 / law.shape);
}

}  // namespace detail

// Mean residual life of a known law: closed form where available, otherwise
// adaptive quadrature of the conditional survival to ~1e-10.
inline double true_mrl(const LifetimeLaw& law, double t) {
    if (!(t >= 0.0)) throw outside_support_error(t);
    if (const auto* e = std::get_if<ExponentialLaw>(&law)) {
        return 1.0 / e->rate;  // memoryless
    }
    if (const auto* u = std::get_if<UniformLaw>(&law)) {
        if (t >= u->upper) throw outside_support_error(t);
        return 0.5 * (u->upper - t);
    }
    const auto& w = std::get<WeibullLaw>(law);
    const double cutoff = detail::weibull_tail_cutoff(w, t);
    const double base = std::pow(t / w.scale, w.shape);
    // Integrate S(u)/S(t) directly so the integrand starts at 1.
    const double integral = integrate(
        [&](double x) { return std::exp(base - std::pow(x / w.scale, w.shape)); },
        t, cutoff, 1e-11);
    return integral;
}

// Asymptotic variance of the MRL estimator with complete (uncensored) data:
// Var(X - t | X > t) / S(t). Serves as simulation ground truth.
inline double complete_data_variance(const LifetimeLaw& law, double t) {
    if (!(t >= 0.0)) throw outside_support_error(t);
    if (const auto* e = std::get_if<ExponentialLaw>(&law)) {
        return std::exp(e->rate * t) / (e->rate * e->rate);
    }
    if (const auto* u = std::get_if<UniformLaw>(&law)) {
        if (t >= u->upper) throw outside_support_error(t);
        // X | X > t ~ Uniform(t, b): variance (b-t)^2/12, S(t) = (b-t)/b.
        return u->upper * (u->upper - t) / 12.0;
    }
    const auto& w = std::get<WeibullLaw>(law);
    const double cutoff = detail::weibull_tail_cutoff(w, t);
    const double base = std::pow(t / w.scale, w.shape);
    const double m = true_mrl(law, t);
    // E[(X-t)^2 | X > t] = int_t^inf 2 (x-t) S(x)/S(t) dx.
    const double second = integrate(
        [&](double x) {
            return 2.0 * (x - t) * std::exp(base - std::pow(x / w.scale, w.shape));
        },
        t, cutoff, 1e-11);
    const double cond_var = second - m * m;
    return cond_var / survival(law, t);
}

}  // namespace mrl
