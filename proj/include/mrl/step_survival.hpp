#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mrl/errors.hpp"
#include "mrl/sample.hpp"

namespace mrl {

// Right-continuous step survival function: value 1 on [0, knots[0]) and
// values[j] on [knots[j], knots[j+1]). Carries the per-observation
// product-limit masses (Stute weights) aligned with the ordered sample.
//
// With efron_modified = true the largest observation is treated as an event,
// which forces the curve to 0 at and beyond last_obs and attaches the
// residual plateau mass to the largest observation. With efron_modified =
// false the weights follow the textbook product formula exactly: every
// censored observation has weight 0 and the weights sum to
// 1 - S(last_obs), the mass the product-limit estimator leaves past the
// largest observation when it is censored.
struct StepSurvival {
    std::vector<double> knots;          // ascending jump times
    std::vector<double> values;         // value on [knots[j], knots[j+1])
    std::vector<double> stute_weights;  // aligned with ordered observations
    std::vector<Observation> ordered;   // the observations the weights refer to
    bool efron_modified = false;
    double last_obs = 0.0;              // largest observed time
    double last_event_time = std::numeric_limits<double>::quiet_NaN();

    // Right-continuous evaluation: the jump at t is included.
    double value_at(double t) const {
        auto it = std::upper_bound(knots.begin(), knots.end(), t);
        if (it == knots.begin()) return 1.0;
        return values[static_cast<std::size_t>(it - knots.begin()) - 1];
    }

    // Left limit at t: jumps at t itself are excluded.
    double value_before(double t) const {
        auto it = std::lower_bound(knots.begin(), knots.end(), t);
        if (it == knots.begin()) return 1.0;
        return values[static_cast<std::size_t>(it - knots.begin()) - 1];
    }
};

namespace detail {

// Product-limit estimator over an already-ordered observation sequence.
// The tie convention is fully encoded in the order of `ordered`; the flags
// decide which observations are events for this curve. treat_last_as_event
// implements the Efron modification for both the curve and the weights.
inline StepSurvival product_limit_ordered(std::vector<Observation> ordered,
                                          bool treat_last_as_event) {
    const std::size_t n = ordered.size();
    StepSurvival out;
    out.ordered = std::move(ordered);
    out.efron_modified = treat_last_as_event;
    out.last_obs = out.ordered.back().time;
    out.stute_weights.assign(n, 0.0);

    // The running product prod_{j<i} [(n-j-1)/(n-j)]^{delta_j} doubles as
    // the current product-limit value; the weight at an event with risk set
    // of size r is that product divided by r.
    double carry = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool ev = out.ordered[i].event || (treat_last_as_event && i == n - 1);
        const double at_risk = static_cast<double>(n - i);
        if (ev) {
            out.stute_weights[i] = carry / at_risk;
            carry *= (at_risk - 1.0) / at_risk;
            // Emit/refresh the knot once all events at this time are absorbed.
            const double t = out.ordered[i].time;
            if (!out.knots.empty() && out.knots.back() == t) {
                out.values.back() = carry;
            } else {
                out.knots.push_back(t);
                out.values.push_back(carry);
            }
        }
    }
    return out;
}

}  // namespace detail

// Kaplan-Meier product-limit estimator of the lifetime survival function.
// With efron = true the estimate is forced to 0 past the largest
// observation; all downstream smoothing builds on this form.
inline StepSurvival product_limit(const CensoredSample& s, bool efron = true) {
    StepSurvival out = detail::product_limit_ordered(s.observations(), efron);
    out.last_event_time = s.largest_event_time();
    return out;
}

// Product-limit estimate of the censoring survival 1 - G, obtained by
// flipping every event flag. The physical order of tied observations is
// kept (deaths still precede censorings), so censoring events at a tied
// time occur after the deaths there. A sample with no censoring yields the
// constant 1 (no knots); this is not an error.
inline StepSurvival censoring_km(const CensoredSample& s) {
    std::vector<Observation> flipped = s.observations();
    double last_flip_event = std::numeric_limits<double>::quiet_NaN();
    for (Observation& o : flipped) {
        o.event = !o.event;
        if (o.event) last_flip_event = o.time;
    }
    StepSurvival out = detail::product_limit_ordered(std::move(flipped), false);
    out.last_event_time = last_flip_event;
    return out;
}

// Exact integral of the step function over [t, infinity). Requires the
// Efron-modified form: only then is the support finite.
inline double integrate_tail(const StepSurvival& step, double t) {
    if (!step.efron_modified) throw not_efron_modified_error();
    if (t >= step.last_obs || step.knots.empty()) return 0.0;
    if (t < 0.0) t = 0.0;

    double total = 0.0;
    // Segment [0-or-t, knots[0]) at value 1.
    double seg_start = t;
    if (t < step.knots.front()) {
        total += (step.knots.front() - t) * 1.0;
        seg_start = step.knots.front();
    }
    auto it = std::upper_bound(step.knots.begin(), step.knots.end(), seg_start);
    std::size_t j = static_cast<std::size_t>(it - step.knots.begin()) - 1;
    for (; j + 1 < step.knots.size(); ++j) {
        const double a = std::max(seg_start, step.knots[j]);
        total += (step.knots[j + 1] - a) * step.values[j];
    }
    // Under Efron the last knot is last_obs and the value beyond it is 0.
    return total;
}

// Step (Yang-type) mean residual life: tail integral over current value.
// Defined only before the last observed event; std::nullopt past it.
inline std::optional<double> step_mrl(const StepSurvival& step, double t) {
    if (!step.efron_modified) throw not_efron_modified_error();
    if (!(t >= 0.0) || !(t < step.last_event_time)) return std::nullopt;
    const double denom = step.value_at(t);
    if (denom <= 0.0) return std::nullopt;
    return integrate_tail(step, t) / denom;
}

}  // namespace mrl
