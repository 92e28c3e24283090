#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "mrl/errors.hpp"

namespace mrl {

// Adaptive Simpson integration with Richardson extrapolation. Splits until
// the local Simpson refinement agrees within the (absolute) tolerance
// allotted to the subinterval; smooth integrands converge in a handful of
// levels. Depth is capped to keep pathological integrands from recursing
// forever.
namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(F& f, double a, double fa, double b, double fb, double m,
                            double fm, double whole, double tol, int depth, int force) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_step(f, a, fa, m, fm, lm, flm);
    const double right = simpson_step(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    // force > 0 subdivides unconditionally: the agreement test alone can
    // accept a panel whose sharp feature sits symmetrically between nodes.
    if (depth <= 0 || (force <= 0 && std::abs(delta) <= 15.0 * tol))
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1,
                                force - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1,
                                force - 1);
}

}  // namespace detail

// Integral of f over [a, b] to absolute tolerance abs_tol. The first
// force_levels recursion levels always split.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12, int max_depth = 48,
                 int force_levels = 5) {
    if (!(b >= a)) throw error("integration bounds must satisfy a <= b");
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = detail::simpson_step(f, a, fa, b, fb, m, fm);
    return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth,
                                        force_levels);
}

}  // namespace mrl
