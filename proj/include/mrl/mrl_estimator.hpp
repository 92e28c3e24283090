#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mrl/errors.hpp"
#include "mrl/poisson_smoother.hpp"
#include "mrl/sample.hpp"
#include "mrl/step_survival.hpp"

namespace mrl {

// Below this smoothed-survival level the MRL ratio is numerically
// meaningless (deep right tail); points there are reported as undefined.
inline constexpr double kDenominatorFloor = 1e-10;

struct CurveMeta {
    std::size_t n = 0;
    double censoring_rate = 0.0;
    TieRule tie_rule = TieRule::deaths_first;
};

struct MrlPoint {
    double t = 0.0;
    std::optional<double> value;      // smooth MRL; nullopt where undefined
    std::optional<double> std_error;  // plug-in standard error of the estimate
    std::optional<double> ci_lower;
    std::optional<double> ci_upper;
};

// Smooth MRL curve on an evaluation grid, with optional per-point
// inference columns filled in by the caller.
struct MrlEstimate {
    std::vector<MrlPoint> points;
    double lambda_used = 0.0;
    CurveMeta meta;
};

// Shared machinery for evaluating the smoothed survival function and its
// closed-form MRL at many t values: one pass precomputes the step values on
// the smoothing grid k/lambda together with their suffix sums, after which
// each evaluation touches only the Poisson window around lambda*t.
//
// The MRL value is the normalized form of the double-sum representation:
// multiplying numerator and denominator of
//
//        (1/L) sum_k sum_{r<=k} (tL)^{k-r}/(k-r)! S(k/L)
//        ----------------------------------------------
//             sum_k (tL)^k / k!  S(k/L)
//
// by e^{-tL} turns every term into a Poisson probability, so the
// numerator becomes (1/L) sum_k S(k/L) P_k(tL) with P_k the Poisson CDF
// (one running cumulative sum, O(window) per point) and the denominator
// the smoothed survival itself. No (tL)^k overflow can occur.
class SmoothMrlEngine {
public:
    SmoothMrlEngine(const StepSurvival& step, const PoissonSmoother& sm)
        : sm_(sm), last_event_(step.last_event_time) {
        if (!step.efron_modified) throw not_efron_modified_error();
        const double terms = std::floor(sm.lambda * step.last_obs);
        if (!(terms >= 0.0) || terms + 1.0 > static_cast<double>(sm.max_terms))
            throw error("smoothing series length exceeds max_terms; lower lambda or raise the cap");
        const std::size_t n_terms = static_cast<std::size_t>(terms);

        table_.resize(n_terms + 1);
        std::size_t j = 0;
        double cur = 1.0;
        for (std::size_t k = 0; k <= n_terms; ++k) {
            const double x = static_cast<double>(k) / sm.lambda;
            while (j < step.knots.size() && step.knots[j] <= x) {
                cur = step.values[j];
                ++j;
            }
            table_[k] = cur;
        }
        // suffix_[k] = sum_{j >= k} table_[j]; entry n_terms+1 is 0.
        suffix_.assign(n_terms + 2, 0.0);
        long double acc = 0.0L;
        for (std::size_t k = n_terms + 1; k-- > 0;) {
            acc += table_[k];
            suffix_[k] = static_cast<double>(acc);
        }
    }

    double lambda() const { return sm_.lambda; }
    double last_event_time() const { return last_event_; }
    std::span<const double> grid_table() const { return table_; }

    // Smoothed survival S~(t) = sum_k S(k/lambda) p_k(lambda t).
    double survival(double t) const {
        return smooth(sm_, table_, t, GridExtension::zero);
    }

    // Exact integral of the smoothed survival over [t, infinity):
    // (1/lambda) sum_k S(k/lambda) P_k(lambda t). Terms above the Poisson
    // window have P_k within tail_epsilon of 1 and are folded in through
    // the precomputed suffix sums.
    double tail_integral(double t) const {
        if (!(t >= 0.0)) throw error("tail integral abscissa t must be >= 0");
        const PoissonWindow w = poisson_window(sm_.lambda * t, sm_.tail_epsilon, sm_.max_terms);
        const std::size_t n_max = table_.size() - 1;
        detail::KahanSum acc;
        detail::KahanSum cdf;  // running P_k from the window start
        for (std::size_t k = w.first; k <= w.last(); ++k) {
            cdf.add(w.pmf[k - w.first]);
            if (k > n_max) break;
            acc.add(table_[k] * cdf.value());
        }
        if (w.last() < n_max) acc.add(suffix_[w.last() + 1]);
        return acc.value() / sm_.lambda;
    }

    // Closed-form smooth MRL at t. Throws domain_exceeded_error at/past the
    // last event time and degenerate_denominator_error in the deep tail.
    double mrl(double t) const {
        if (!(t >= 0.0) || !(t < last_event_)) throw domain_exceeded_error(t);
        const double denom = survival(t);
        if (!(denom >= kDenominatorFloor)) throw degenerate_denominator_error(t);
        return tail_integral(t) / denom;
    }

    // Curve-friendly evaluation: undefined instead of throwing.
    std::optional<double> mrl_if_defined(double t) const {
        if (!(t >= 0.0) || !(t < last_event_)) return std::nullopt;
        const double denom = survival(t);
        if (!(denom >= kDenominatorFloor)) return std::nullopt;
        return tail_integral(t) / denom;
    }

private:
    PoissonSmoother sm_;
    double last_event_;
    std::vector<double> table_;
    std::vector<double> suffix_;
};

// Data-adaptive smoothing rate: n over the largest observation.
inline double plug_in_lambda(const CensoredSample& s) {
    return static_cast<double>(s.size()) / s.largest_time();
}

inline double plug_in_lambda(const StepSurvival& step) {
    return static_cast<double>(step.ordered.size()) / step.last_obs;
}

// Single-point smooth MRL estimate.
inline double smooth_mrl(const StepSurvival& step, const PoissonSmoother& sm, double t) {
    return SmoothMrlEngine(step, sm).mrl(t);
}

namespace detail {

inline CurveMeta meta_from(const StepSurvival& step) {
    CurveMeta m;
    m.n = step.ordered.size();
    m.censoring_rate = censoring_rate(std::span<const Observation>(step.ordered));
    m.tie_rule = TieRule::deaths_first;
    return m;
}

}  // namespace detail

// Vectorized smooth MRL over an ascending grid; one shared precomputation.
// Points at/after the last event time (or in the degenerate tail) are
// flagged undefined rather than aborting the curve.
inline MrlEstimate smooth_mrl_curve(const StepSurvival& step, const PoissonSmoother& sm,
                                    std::span<const double> grid) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0)) throw invalid_grid_error("grid values must be >= 0");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw invalid_grid_error("grid must be strictly ascending");
    }
    const SmoothMrlEngine engine(step, sm);
    MrlEstimate est;
    est.lambda_used = sm.lambda;
    est.meta = detail::meta_from(step);
    est.points.reserve(grid.size());
    for (double t : grid) {
        MrlPoint p;
        p.t = t;
        p.value = engine.mrl_if_defined(t);
        est.points.push_back(p);
    }
    return est;
}

// One curve per smoothing rate, in the given order.
inline std::vector<MrlEstimate> lambda_sweep(const StepSurvival& step,
                                             std::span<const double> grid,
                                             std::span<const double> lambdas) {
    std::vector<MrlEstimate> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas)
        out.push_back(smooth_mrl_curve(step, PoissonSmoother(lambda), grid));
    return out;
}

}  // namespace mrl
