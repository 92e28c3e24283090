#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "mrl/mrl_estimator.hpp"
#include "mrl/quadrature.hpp"
#include "mrl/random_stream.hpp"
#include "mrl/sample.hpp"
#include "mrl/step_survival.hpp"

using namespace mrl;

namespace {

const CensoredSample& four_point_sample() {
    static const CensoredSample s = CensoredSample::from_records(
        {{1.0, true}, {2.0, false}, {3.0, true}, {4.0, true}});
    return s;
}

CensoredSample random_sample(std::uint64_t seed, std::uint64_t rep, std::size_t max_n) {
    RandomStream rs(seed, rep);
    const std::size_t n = 5 + rs.bits(0) % (max_n - 4);
    std::vector<Observation> records;
    bool any_event = false;
    for (std::size_t i = 0; i < n; ++i) {
        const bool ev = rs.uniform(2 * i + 1) < 0.65;
        records.push_back({-std::log1p(-rs.uniform(2 * i + 2)), ev});
        any_event |= ev;
    }
    if (!any_event) records[0].event = true;
    return CensoredSample::from_records(std::move(records));
}

// Ratio-of-integrals oracle: adaptive quadrature of the smoothed survival.
double quadrature_mrl(const SmoothMrlEngine& engine, const StepSurvival& step, double t) {
    const double cutoff = step.last_obs * (1.0 + 15.0 / std::sqrt(engine.lambda())) + 1.0;
    const double numer =
        integrate([&](double y) { return engine.survival(y); }, t, cutoff, 1e-12);
    return numer / engine.survival(t);
}

}  // namespace

TEST_CASE("at t=0 the estimate is the Riemann sum of the survival table") {
    auto km = product_limit(four_point_sample(), true);
    PoissonSmoother sm(37.5);
    SmoothMrlEngine engine(km, sm);
    long double riemann = 0.0L;
    for (double s : engine.grid_table()) riemann += s;
    const double expected = static_cast<double>(riemann) / sm.lambda;  // denominator is S(0)=1
    REQUIRE(engine.survival(0.0) == 1.0);
    REQUIRE(engine.mrl(0.0) == Catch::Approx(expected).epsilon(1e-13));
}

TEST_CASE("closed form matches the quadrature of the smoothed survival") {
    auto km = product_limit(four_point_sample(), true);
    PoissonSmoother sm(200.0);
    SmoothMrlEngine engine(km, sm);
    for (double t : {0.0, 0.5, 2.0}) {
        const double closed = engine.mrl(t);
        const double oracle = quadrature_mrl(engine, km, t);
        REQUIRE(closed == Catch::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("definition equivalence on random censored samples") {
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        auto s = random_sample(31, rep, 80);
        auto km = product_limit(s, true);
        PoissonSmoother sm(plug_in_lambda(s));
        SmoothMrlEngine engine(km, sm);
        for (int j = 1; j <= 4; ++j) {
            const double t = 0.85 * km.last_event_time * j / 4.0;
            if (!engine.mrl_if_defined(t)) continue;
            REQUIRE(engine.mrl(t) ==
                    Catch::Approx(quadrature_mrl(engine, km, t)).epsilon(1e-8));
        }
    }
}

TEST_CASE("large lambda recovers the step MRL") {
    auto km = product_limit(four_point_sample(), true);
    SmoothMrlEngine engine(km, PoissonSmoother(1e5));
    REQUIRE(std::abs(engine.mrl(2.0) - 1.5) < 0.02);
}

TEST_CASE("lambda ladder converges to the step MRL") {
    auto km = product_limit(four_point_sample(), true);
    const double target = step_mrl(km, 2.0).value();
    std::vector<double> lambdas = {1e2, 1e3, 1e4, 1e5};
    std::vector<double> grid = {2.0};
    auto curves = lambda_sweep(km, grid, lambdas);
    REQUIRE(curves.size() == 4);
    double prev_err = 1e300;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        REQUIRE(curves[i].lambda_used == lambdas[i]);
        const double err = std::abs(curves[i].points[0].value.value() - target);
        REQUIRE(err < prev_err);
        prev_err = err;
    }
    REQUIRE(prev_err < 0.02);
}

TEST_CASE("tail integral identity against quadrature") {
    auto s = random_sample(77, 0, 40);
    auto km = product_limit(s, true);
    PoissonSmoother sm(plug_in_lambda(s));
    SmoothMrlEngine engine(km, sm);
    const double upper = km.last_obs * (1.0 + 15.0 / std::sqrt(sm.lambda));
    for (double frac : {0.0, 0.2, 0.6}) {
        const double t = frac * km.last_obs;
        const double quad =
            integrate([&](double y) { return engine.survival(y); }, t, upper, 1e-12);
        REQUIRE(engine.tail_integral(t) == Catch::Approx(quad).epsilon(1e-8));
    }
}

TEST_CASE("scale equivariance under binary scaling") {
    // Times scaled by 4, lambda by 1/4: every float op commutes with the
    // power-of-two scaling, so the estimates match bit for bit.
    auto base = four_point_sample();
    std::vector<Observation> scaled_records;
    for (auto o : base.observations()) scaled_records.push_back({4.0 * o.time, o.event});
    auto scaled = CensoredSample::from_records(scaled_records);

    const double lambda = 12.5;
    SmoothMrlEngine eng(product_limit(base, true), PoissonSmoother(lambda));
    SmoothMrlEngine eng_scaled(product_limit(scaled, true), PoissonSmoother(lambda / 4.0));
    for (double t : {0.0, 0.5, 1.75, 2.5}) {
        REQUIRE(eng_scaled.mrl(4.0 * t) == 4.0 * eng.mrl(t));
    }
}

TEST_CASE("estimates are positive and the curve has no jumps") {
    auto s = random_sample(41, 2, 60);
    auto km = product_limit(s, true);
    SmoothMrlEngine engine(km, PoissonSmoother(plug_in_lambda(s)));
    const int points = 400;
    const double t_max = 0.9 * km.last_event_time;
    double prev = engine.mrl(0.0);
    double max_diff = 0.0;
    for (int j = 1; j <= points; ++j) {
        const double t = t_max * j / points;
        const double cur = engine.mrl(t);
        REQUIRE(cur > 0.0);
        max_diff = std::max(max_diff, std::abs(cur - prev));
        prev = cur;
    }
    // A step estimator would jump by O(1) at event times; the smooth curve
    // moves by O(grid step) between neighbours.
    REQUIRE(max_diff < 10.0 * t_max / points + 1e-3);
}

TEST_CASE("domain guards") {
    auto km = product_limit(four_point_sample(), true);
    SmoothMrlEngine engine(km, PoissonSmoother(50.0));
    REQUIRE_THROWS_AS(engine.mrl(4.0), domain_exceeded_error);
    REQUIRE_THROWS_AS(engine.mrl(11.0), domain_exceeded_error);
    REQUIRE_THROWS_AS(engine.mrl(-0.5), domain_exceeded_error);
    REQUIRE_FALSE(engine.mrl_if_defined(4.0).has_value());
    REQUIRE(engine.mrl_if_defined(3.9).has_value());
}

TEST_CASE("degenerate denominator in the deep tail") {
    // lambda large enough that the smoothed survival at t just below the
    // last event underflows the floor.
    auto s = CensoredSample::from_records({{0.01, true}, {0.02, true}, {10.0, true}});
    auto km = product_limit(s, true);
    SmoothMrlEngine engine(km, PoissonSmoother(2000.0));
    REQUIRE(engine.survival(9.99) < kDenominatorFloor);
    REQUIRE_THROWS_AS(engine.mrl(9.99), degenerate_denominator_error);
    REQUIRE_FALSE(engine.mrl_if_defined(9.99).has_value());
}

TEST_CASE("smooth_mrl single point agrees with the engine") {
    auto km = product_limit(four_point_sample(), true);
    PoissonSmoother sm(80.0);
    REQUIRE(smooth_mrl(km, sm, 1.25) == SmoothMrlEngine(km, sm).mrl(1.25));
}

TEST_CASE("curve evaluation flags and grid validation") {
    auto km = product_limit(four_point_sample(), true);
    PoissonSmoother sm(60.0);

    std::vector<double> single = {0.0};
    auto est = smooth_mrl_curve(km, sm, single);
    REQUIRE(est.points.size() == 1);
    REQUIRE(est.points[0].value.value() == smooth_mrl(km, sm, 0.0));
    REQUIRE(est.meta.n == 4);
    REQUIRE(est.meta.censoring_rate == 0.25);
    REQUIRE(est.lambda_used == 60.0);

    std::vector<double> reversed = {1.0, 0.5};
    REQUIRE_THROWS_AS(smooth_mrl_curve(km, sm, reversed), invalid_grid_error);
    std::vector<double> negative = {-1.0, 0.5};
    REQUIRE_THROWS_AS(smooth_mrl_curve(km, sm, negative), invalid_grid_error);

    // Straddling the last event time: trailing points undefined, no NaN.
    std::vector<double> straddle = {1.0, 3.9, 4.0, 5.0};
    auto est2 = smooth_mrl_curve(km, sm, straddle);
    REQUIRE(est2.points[0].value.has_value());
    REQUIRE(est2.points[1].value.has_value());
    REQUIRE_FALSE(est2.points[2].value.has_value());
    REQUIRE_FALSE(est2.points[3].value.has_value());
    for (const auto& p : est2.points)
        if (p.value) REQUIRE(std::isfinite(*p.value));
}

TEST_CASE("series cap guards the table size") {
    auto s = CensoredSample::from_records({{1.0, true}, {50.0, true}});
    auto km = product_limit(s, true);
    PoissonSmoother sm(1e5, 1e-12, 100000);  // needs 5e6 terms
    REQUIRE_THROWS_AS(SmoothMrlEngine(km, sm), error);
}
