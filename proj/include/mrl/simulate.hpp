#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "mrl/distributions.hpp"
#include "mrl/errors.hpp"
#include "mrl/inference.hpp"
#include "mrl/mrl_estimator.hpp"
#include "mrl/random_stream.hpp"
#include "mrl/sample.hpp"
#include "mrl/stats.hpp"
#include "mrl/step_survival.hpp"

namespace mrl {

enum class LambdaRule { plug_in, fixed };

// One Monte Carlo configuration. The seed is mandatory: reproducibility is
// a contract, not a default.
struct Scenario {
    LifetimeLaw lifetime_law = ExponentialLaw{1.0};
    CensoringLaw censoring_law = NoCensoring{};
    std::size_t n = 0;
    std::size_t replications = 0;
    std::vector<double> t_grid;
    LambdaRule lambda_rule = LambdaRule::plug_in;
    double fixed_lambda = 0.0;
    std::optional<std::uint64_t> seed;
    double alpha = 0.05;

    void validate() const {
        const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        std::visit([&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, ExponentialLaw>) {
                if (!positive(l.rate)) throw error("lifetime rate must be positive");
            } else if constexpr (std::is_same_v<L, WeibullLaw>) {
                if (!positive(l.shape) || !positive(l.scale))
                    throw error("weibull shape and scale must be positive");
            } else {
                if (!positive(l.upper)) throw error("uniform upper bound must be positive");
            }
        }, lifetime_law);
        std::visit([&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, ExponentialLaw>) {
                if (!positive(l.rate)) throw error("censoring rate must be positive");
            } else if constexpr (std::is_same_v<L, UniformLaw>) {
                if (!positive(l.upper)) throw error("censoring upper bound must be positive");
            }
        }, censoring_law);
        if (n < 2) throw error("scenario requires n >= 2");
        if (replications < 1) throw error("scenario requires replications >= 1");
        if (t_grid.empty()) throw error("t_grid must be nonempty");
        const double sup = upper_support(lifetime_law);
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            if (!(t_grid[i] >= 0.0) || !(t_grid[i] < sup))
                throw error("t_grid values must lie inside the lifetime support");
            if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
                throw error("t_grid must be strictly ascending");
        }
        if (lambda_rule == LambdaRule::fixed && !positive(fixed_lambda))
            throw error("fixed lambda must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw error("alpha must lie in (0,1)");
        if (!seed.has_value()) throw error("scenario seed is required");
    }
};

struct PointRecord {
    double t = 0.0;
    double estimate = 0.0;    // smooth MRL
    double error = 0.0;       // estimate - true MRL
    double std_error = 0.0;   // sqrt(n) * error / sigma_hat
    bool covered = false;     // CI at level 1-alpha contains the truth
};

struct ReplicateRecord {
    std::size_t rep = 0;
    double lambda = 0.0;
    double sup_error = 0.0;
    bool excluded = false;
    std::string failure;  // reason, when excluded
    std::vector<PointRecord> points;
};

struct PointAggregate {
    double t = 0.0;
    std::size_t used = 0;
    double coverage = 0.0;
    double error_variance_scaled = 0.0;  // empirical Var of sqrt(n)(est - truth)
};

struct SimulationReport {
    Scenario scenario;
    std::vector<ReplicateRecord> replicates;
    std::vector<PointAggregate> per_t;
    std::size_t used_replicates = 0;
    std::size_t excluded_replicates = 0;
    double median_sup_error = 0.0;
    double mean_sup_error = 0.0;
};

struct RunOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
};

// n i.i.d. censored pairs via inverse-CDF sampling from the counter stream
// keyed by (seed, rep_index): lifetime draws use counters 0..n-1, censoring
// draws n..2n-1, independent of the censoring law, so the mapping from
// (seed, rep, i) to the i-th pair never shifts.
inline CensoredSample draw_sample(const Scenario& sc, std::size_t rep_index) {
    const RandomStream stream(sc.seed.value(), rep_index);
    std::vector<Observation> records;
    records.reserve(sc.n);
    const bool censored = !std::holds_alternative<NoCensoring>(sc.censoring_law);
    for (std::size_t i = 0; i < sc.n; ++i) {
        const double lifetime = quantile(sc.lifetime_law, stream.uniform(i));
        double cens = std::numeric_limits<double>::infinity();
        if (censored) {
            const double u = stream.uniform(sc.n + i);
            if (const auto* e = std::get_if<ExponentialLaw>(&sc.censoring_law))
                cens = quantile(*e, u);
            else
                cens = quantile(std::get<UniformLaw>(sc.censoring_law), u);
        }
        records.push_back({std::min(lifetime, cens), lifetime <= cens});
    }
    return CensoredSample::from_records(std::move(records));
}

namespace detail {

inline ReplicateRecord run_replicate(const Scenario& sc, std::size_t rep) {
    ReplicateRecord rec;
    rec.rep = rep;
    try {
        const CensoredSample sample = draw_sample(sc, rep);
        const double lambda = (sc.lambda_rule == LambdaRule::fixed)
                                  ? sc.fixed_lambda
                                  : plug_in_lambda(sample);
        rec.lambda = lambda;
        const StepSurvival step = product_limit(sample, true);
        const SmoothMrlEngine engine(step, PoissonSmoother(lambda));

        double sup = 0.0;
        for (double t : sc.t_grid) {
            const double est = engine.mrl(t);
            const double surv = engine.survival(t);
            const double var = variance_hat(sample, t, est, surv);
            if (!(var > 0.0)) throw error("degenerate influence variance");
            const double truth = true_mrl(sc.lifetime_law, t);
            const double err = est - truth;
            const double root_n = std::sqrt(static_cast<double>(sc.n));
            const auto ci = normal_ci(est, var, sc.n, sc.alpha);
            PointRecord p;
            p.t = t;
            p.estimate = est;
            p.error = err;
            p.std_error = root_n * err / std::sqrt(var);
            p.covered = (ci.lower <= truth && truth <= ci.upper);
            rec.points.push_back(p);
            sup = std::max(sup, std::abs(err));
        }
        rec.sup_error = sup;
    } catch (const std::exception& e) {
        rec.excluded = true;
        rec.failure = e.what();
        rec.points.clear();
        rec.sup_error = 0.0;
    }
    return rec;
}

}  // namespace detail

// Runs every replicate and aggregates with a fixed reduction order, so the
// report is identical whatever the worker count. Failed replicates are
// recorded and excluded, never retried (a retry would bias the study).
inline SimulationReport run(const Scenario& sc, const RunOptions& opts = {}) {
    sc.validate();
    SimulationReport report;
    report.scenario = sc;
    report.replicates.resize(sc.replications);

    unsigned workers = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = static_cast<unsigned>(
        std::min<std::size_t>(workers, sc.replications));

    if (workers <= 1) {
        for (std::size_t r = 0; r < sc.replications; ++r)
            report.replicates[r] = detail::run_replicate(sc, r);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t r = w; r < sc.replications; r += workers)
                    report.replicates[r] = detail::run_replicate(sc, r);
            });
        }
        for (auto& th : pool) th.join();
    }

    // Deterministic aggregation in replicate order.
    std::vector<double> sups;
    for (const auto& rec : report.replicates) {
        if (rec.excluded) {
            ++report.excluded_replicates;
        } else {
            ++report.used_replicates;
            sups.push_back(rec.sup_error);
        }
    }
    if (!sups.empty()) {
        report.median_sup_error = median(sups);
        report.mean_sup_error = mean(std::span<const double>(sups));
    }
    const double root_n = std::sqrt(static_cast<double>(sc.n));
    for (std::size_t j = 0; j < sc.t_grid.size(); ++j) {
        PointAggregate agg;
        agg.t = sc.t_grid[j];
        std::vector<double> scaled_errors;
        std::size_t covered = 0;
        for (const auto& rec : report.replicates) {
            if (rec.excluded) continue;
            const auto& p = rec.points[j];
            scaled_errors.push_back(root_n * p.error);
            if (p.covered) ++covered;
        }
        agg.used = scaled_errors.size();
        if (agg.used > 0)
            agg.coverage = static_cast<double>(covered) / static_cast<double>(agg.used);
        if (agg.used > 1)
            agg.error_variance_scaled =
                variance(std::span<const double>(scaled_errors), /*unbiased=*/true);
        report.per_t.push_back(agg);
    }
    return report;
}

}  // namespace mrl
