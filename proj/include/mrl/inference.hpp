#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mrl/distributions.hpp"
#include "mrl/errors.hpp"
#include "mrl/sample.hpp"
#include "mrl/stats.hpp"
#include "mrl/step_survival.hpp"

namespace mrl {

// Per-observation pieces of the i.i.d. influence representation of the MRL
// estimator, split by functional:
//   excess_*    terms built from (Z - t) I(Z > t)   (residual lifetime)
//   indicator_* terms built from I(Z > t)           (survival indicator)
// The ipcw terms carry delta/(1 - G(Z^-)) reweighting and vanish at censored
// observations; the gamma1 terms carry a (1 - delta) factor and vanish at
// events; the gamma2 terms are the compensator sums over censored points
// below each observation.
struct InfluenceDecomposition {
    std::vector<double> excess_ipcw;
    std::vector<double> indicator_ipcw;
    std::vector<double> excess_gamma1;
    std::vector<double> indicator_gamma1;
    std::vector<double> excess_gamma2;
    std::vector<double> indicator_gamma2;
    double m_hat = 0.0;
    double s_hat = 1.0;
    // Largest observation censored: functionals past it are truncated, not
    // extrapolated.
    bool tail_truncated = false;

    std::size_t size() const { return excess_ipcw.size(); }

    // Combined influence value per observation,
    // psi_i = [A_i - m_hat * B_i] / s_hat with
    // A = excess_ipcw + excess_gamma1 - excess_gamma2 and B likewise.
    std::vector<double> psi() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            const double a = excess_ipcw[i] + excess_gamma1[i] - excess_gamma2[i];
            const double b = indicator_ipcw[i] + indicator_gamma1[i] - indicator_gamma2[i];
            out[i] = (a - m_hat * b) / s_hat;
        }
        return out;
    }
};

namespace detail {

// lo[i] = first index of the time block containing i, hi[i] = last index.
// With ties all observations at one time share H(t^-) and H(t).
struct TimeBlocks {
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;
};

inline TimeBlocks time_blocks(std::span<const Observation> obs) {
    const std::size_t n = obs.size();
    TimeBlocks b;
    b.lo.resize(n);
    b.hi.resize(n);
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (obs[i].time != obs[start].time) start = i;
        b.lo[i] = start;
    }
    std::size_t end = n - 1;
    for (std::size_t i = n; i-- > 0;) {
        if (obs[i].time != obs[end].time) end = i;
        b.hi[i] = end;
    }
    return b;
}

// Cumulative exponent of the multiplicative censoring-compensator: entry i
// is sum over censored Z_j <= Z_i of 1/(n (1 - H(Z_j^-))), evaluated with
// the closed upper limit (ties at Z_i included).
inline std::vector<double> gamma0_exponents(std::span<const Observation> obs,
                                            const TimeBlocks& blocks) {
    const std::size_t n = obs.size();
    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!obs[i].event) acc += 1.0 / static_cast<double>(n - blocks.lo[i]);
        cum[i] = acc;
    }
    std::vector<double> closed(n);
    for (std::size_t i = 0; i < n; ++i) closed[i] = cum[blocks.hi[i]];
    return closed;
}

}  // namespace detail

// Multiplicative estimate of 1/(1 - G(x)): exp of the cumulative censoring
// hazard sum_{censored Z_j <= x} 1/(n (1 - H(Z_j^-))). Nondecreasing, >= 1.
// Throws tail_divergence_error when asked to extrapolate past a censored
// largest observation.
inline double gamma0_hat(const CensoredSample& s, double x) {
    const auto& obs = s.observations();
    if (x > s.largest_time() && !s.largest_is_event()) throw tail_divergence_error(x);
    const std::size_t n = obs.size();
    const auto blocks = detail::time_blocks(obs);
    double acc = 0.0;
    for (std::size_t i = 0; i < n && obs[i].time <= x; ++i) {
        if (!obs[i].event) acc += 1.0 / static_cast<double>(n - blocks.lo[i]);
    }
    return std::exp(acc);
}

// Plug-in evaluation of the influence representation at t: every population
// quantity (H, its sub-distributions, the censoring survival and the
// compensator functionals) is replaced by its empirical counterpart.
// m_hat and s_hat are the MRL and survival estimates at t from the caller's
// chosen estimator. Throws domain_exceeded_error for t at/past the last
// event time.
inline InfluenceDecomposition influence_values(const CensoredSample& s, double t,
                                               double m_hat, double s_hat) {
    if (!(t >= 0.0) || !(t < s.largest_event_time())) throw domain_exceeded_error(t);
    if (!(s_hat > 0.0)) throw degenerate_denominator_error(t);

    const auto& obs = s.observations();
    const std::size_t n = obs.size();
    const double dn = static_cast<double>(n);
    const auto blocks = detail::time_blocks(obs);
    const auto g0_exponent = detail::gamma0_exponents(obs, blocks);

    const StepSurvival cens_km = censoring_km(s);

    InfluenceDecomposition d;
    d.m_hat = m_hat;
    d.s_hat = s_hat;
    d.tail_truncated = !s.largest_is_event();
    d.excess_ipcw.assign(n, 0.0);
    d.indicator_ipcw.assign(n, 0.0);
    d.excess_gamma1.assign(n, 0.0);
    d.indicator_gamma1.assign(n, 0.0);
    d.excess_gamma2.assign(n, 0.0);
    d.indicator_gamma2.assign(n, 0.0);

    // suffix_a[i] = (1/n) sum_{j >= i, event} phi(Z_j) gamma0(Z_j); the
    // strictly-greater-time tail of the event integral is suffix at hi[i]+1.
    std::vector<double> suffix_a(n + 1, 0.0);
    std::vector<double> suffix_b(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double a = 0.0, b = 0.0;
        if (obs[i].event && obs[i].time > t) {
            const double g0 = std::exp(g0_exponent[i]);
            a = (obs[i].time - t) * g0 / dn;
            b = g0 / dn;
        }
        suffix_a[i] = suffix_a[i + 1] + a;
        suffix_b[i] = suffix_b[i + 1] + b;
    }

    // Running gamma2 sums over censored points with strictly smaller time.
    // Denominators use the left limit 1 - H(Z^-) = #(Z_j >= Z)/n, which is
    // never 0 at a sample point, so no term self-divides.
    std::vector<double> cum2_a(n + 1, 0.0);
    std::vector<double> cum2_b(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double incr_a = 0.0, incr_b = 0.0;
        if (!obs[i].event) {
            const double at_or_after = static_cast<double>(n - blocks.lo[i]) / dn;
            incr_a = suffix_a[blocks.hi[i] + 1] / (at_or_after * at_or_after) / dn;
            incr_b = suffix_b[blocks.hi[i] + 1] / (at_or_after * at_or_after) / dn;
        }
        cum2_a[i + 1] = cum2_a[i] + incr_a;
        cum2_b[i + 1] = cum2_b[i] + incr_b;
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double z = obs[i].time;
        if (obs[i].event) {
            // 1 - G(Z^-): censoring drops at Z itself (possible only at
            // ties) happen after the event under the deaths-first order.
            const double g_left = cens_km.value_before(z);
            if (z > t) {
                d.excess_ipcw[i] = (z - t) / g_left;
                d.indicator_ipcw[i] = 1.0 / g_left;
            }
        } else {
            const double at_or_after = static_cast<double>(n - blocks.lo[i]) / dn;
            d.excess_gamma1[i] = suffix_a[blocks.hi[i] + 1] / at_or_after;
            d.indicator_gamma1[i] = suffix_b[blocks.hi[i] + 1] / at_or_after;
        }
        d.excess_gamma2[i] = cum2_a[blocks.lo[i]];
        d.indicator_gamma2[i] = cum2_b[blocks.lo[i]];
    }
    return d;
}

// Plug-in asymptotic variance: divisor-n sample variance of the combined
// influence values. The centering constants of the representation drop out
// of the variance.
inline double variance_hat(const CensoredSample& s, double t, double m_hat, double s_hat) {
    const auto psi = influence_values(s, t, m_hat, s_hat).psi();
    return variance(std::span<const double>(psi), /*unbiased=*/false);
}

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
};

// Symmetric normal-quantile interval estimate +/- z_{1-alpha/2} sqrt(var/n).
inline ConfidenceInterval normal_ci(double estimate, double variance_value, std::size_t n,
                                    double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw error("alpha must lie in (0,1)");
    if (!(variance_value >= 0.0)) throw error("variance must be nonnegative");
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double half = z * std::sqrt(variance_value / static_cast<double>(n));
    return ConfidenceInterval{estimate - half, estimate + half};
}

}  // namespace mrl
