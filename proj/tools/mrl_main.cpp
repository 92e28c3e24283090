// Command-line front end: estimate MRL curves from CSV lifetime data, run
// Monte Carlo scenarios, and sweep the smoothing rate. Exit codes: 0 ok,
// 2 usage, 3 data, 4 numeric.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrl/mrl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
    std::string input;
    std::string output;  // empty = stdout
    std::string format = "csv";
    std::size_t grid_points = 200;
    double t_max_frac = 0.95;
    double alpha = 0.05;
};

[[noreturn]] void fail(int code, const std::string& category, const std::string& message) {
    std::cerr << "error[" << category << "]: " << message << '\n';
    std::exit(code);
}

bool is_data_error(const mrl::error& e) {
    return dynamic_cast<const mrl::parse_error*>(&e) != nullptr ||
           dynamic_cast<const mrl::schema_error*>(&e) != nullptr ||
           dynamic_cast<const mrl::empty_input_error*>(&e) != nullptr ||
           dynamic_cast<const mrl::negative_time_error*>(&e) != nullptr ||
           dynamic_cast<const mrl::non_finite_time_error*>(&e) != nullptr ||
           dynamic_cast<const mrl::all_censored_error*>(&e) != nullptr;
}

[[noreturn]] void fail_mapped(const mrl::error& e) {
    fail(is_data_error(e) ? kExitData : kExitNumeric, is_data_error(e) ? "data" : "numeric",
         e.what());
}

// All output is prepared in memory and committed in one rename, so no file
// appears on a nonzero exit.
void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    const std::filesystem::path target(path);
    const std::filesystem::path tmp(path + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(kExitData, "data", "cannot open output path: " + path);
        out << content;
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            fail(kExitData, "data", "failed writing output: " + path);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(kExitData, "data", "failed moving output into place: " + path);
    }
}

mrl::CensoredSample load_sample(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(kExitData, "data", "cannot open input path: " + path);
    return mrl::read_sample_csv(in);
}

std::vector<double> make_grid(std::size_t points, double t_max) {
    std::vector<double> grid;
    grid.reserve(points);
    if (points == 1) {
        grid.push_back(0.0);
        return grid;
    }
    for (std::size_t j = 0; j < points; ++j)
        grid.push_back(t_max * static_cast<double>(j) / static_cast<double>(points - 1));
    return grid;
}

struct FittedCurve {
    std::vector<mrl::CurveRow> rows;
    std::vector<double> failed_points;
};

FittedCurve fit_curve(const mrl::CensoredSample& sample, const mrl::StepSurvival& step,
                      double lambda, const std::vector<double>& grid, double alpha) {
    const mrl::SmoothMrlEngine engine(step, mrl::PoissonSmoother(lambda));
    FittedCurve out;
    for (double t : grid) {
        mrl::CurveRow row;
        row.point.t = t;
        row.step_mrl = mrl::step_mrl(step, t);
        try {
            const auto value = engine.mrl_if_defined(t);
            if (value) {
                row.point.value = value;
                const double var =
                    mrl::variance_hat(sample, t, *value, engine.survival(t));
                row.point.std_error = std::sqrt(var / static_cast<double>(sample.size()));
                const auto ci = mrl::normal_ci(*value, var, sample.size(), alpha);
                row.point.ci_lower = ci.lower;
                row.point.ci_upper = ci.upper;
            }
        } catch (const mrl::error&) {
            row.point.value.reset();
            row.point.std_error.reset();
            row.point.ci_lower.reset();
            row.point.ci_upper.reset();
            out.failed_points.push_back(t);
        }
        out.rows.push_back(row);
    }
    return out;
}

void warn_failed_points(const std::vector<double>& failed) {
    if (failed.empty()) return;
    std::ostringstream msg;
    msg << "warning: estimator undefined at t =";
    for (double t : failed) msg << ' ' << mrl::fmt_double(t);
    std::cerr << msg.str() << '\n';
}

int cmd_estimate(const CommonOptions& opts, std::optional<double> lambda_override) {
    const mrl::CensoredSample sample = load_sample(opts.input);
    const mrl::StepSurvival step = mrl::product_limit(sample, true);
    const double lambda = lambda_override.value_or(mrl::plug_in_lambda(sample));

    const double t_max = opts.t_max_frac * step.last_event_time;
    const std::vector<double> grid = make_grid(opts.grid_points, t_max);
    const FittedCurve fitted = fit_curve(sample, step, lambda, grid, opts.alpha);
    warn_failed_points(fitted.failed_points);

    bool any_defined = false;
    for (const auto& row : fitted.rows) any_defined = any_defined || row.point.value.has_value();
    if (!any_defined) fail(kExitNumeric, "numeric", "estimator undefined on the whole grid");

    mrl::CurveOutputMeta meta;
    meta.n = sample.size();
    meta.lambda = lambda;
    meta.censoring_rate = mrl::censoring_rate(sample);
    meta.tie_rule = sample.tie_rule();
    std::string content;
    if (opts.format == "json")
        content = mrl::curve_to_json(fitted.rows, meta).dump(2) + "\n";
    else
        content = mrl::curve_to_csv(fitted.rows, meta);
    write_output(opts.output, content);
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opts, const std::vector<double>& lambdas) {
    const mrl::CensoredSample sample = load_sample(opts.input);
    const mrl::StepSurvival step = mrl::product_limit(sample, true);
    const double t_max = opts.t_max_frac * step.last_event_time;
    const std::vector<double> grid = make_grid(opts.grid_points, t_max);

    mrl::CurveOutputMeta meta;
    meta.n = sample.size();
    meta.censoring_rate = mrl::censoring_rate(sample);
    meta.tie_rule = sample.tie_rule();

    std::vector<double> failed;
    if (opts.format == "json") {
        nlohmann::json j;
        j["meta"] = {{"n", meta.n},
                     {"censoring_rate", meta.censoring_rate},
                     {"tie_rule", mrl::to_string(meta.tie_rule)},
                     {"tool_version", mrl::kVersion}};
        auto& curves = j["curves"] = nlohmann::json::array();
        for (double lambda : lambdas) {
            const FittedCurve fitted = fit_curve(sample, step, lambda, grid, opts.alpha);
            failed.insert(failed.end(), fitted.failed_points.begin(),
                          fitted.failed_points.end());
            mrl::CurveOutputMeta m = meta;
            m.lambda = lambda;
            nlohmann::json c = mrl::curve_to_json(fitted.rows, m);
            curves.push_back({{"lambda", lambda}, {"curve", c["curve"]}});
        }
        warn_failed_points(failed);
        write_output(opts.output, j.dump(2) + "\n");
        return kExitOk;
    }

    std::ostringstream out;
    out << "# n=" << meta.n << '\n';
    out << "# censoring_rate=" << mrl::fmt_double(meta.censoring_rate) << '\n';
    out << "# tie_rule=" << mrl::to_string(meta.tie_rule) << '\n';
    out << "# tool_version=" << mrl::kVersion << '\n';
    out << "lambda,t,mrl,stderr,ci_lower,ci_upper,defined,step_mrl\n";
    const auto opt = [](const std::optional<double>& v) {
        return v ? mrl::fmt_double(*v) : std::string();
    };
    for (double lambda : lambdas) {
        const FittedCurve fitted = fit_curve(sample, step, lambda, grid, opts.alpha);
        failed.insert(failed.end(), fitted.failed_points.begin(), fitted.failed_points.end());
        for (const auto& row : fitted.rows) {
            const auto& p = row.point;
            out << mrl::fmt_double(lambda) << ',' << mrl::fmt_double(p.t) << ','
                << opt(p.value) << ',' << opt(p.std_error) << ',' << opt(p.ci_lower) << ','
                << opt(p.ci_upper) << ',' << (p.value ? 1 : 0) << ',' << opt(row.step_mrl)
                << '\n';
        }
    }
    warn_failed_points(failed);
    write_output(opts.output, out.str());
    return kExitOk;
}

int cmd_simulate(const CommonOptions& opts, std::optional<std::uint64_t> seed_flag) {
    std::ifstream in(opts.input, std::ios::binary);
    if (!in) fail(kExitData, "data", "cannot open input path: " + opts.input);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(kExitData, "data", std::string("invalid scenario JSON: ") + e.what());
    }
    mrl::Scenario sc = mrl::scenario_from_json(doc);
    if (seed_flag) sc.seed = *seed_flag;
    if (!sc.seed)
        fail(kExitUsage, "usage",
             "simulate requires an explicit seed (--seed or a 'seed' field)");
    try {
        sc.validate();
    } catch (const mrl::error& e) {
        fail(kExitData, "data", e.what());
    }

    const mrl::SimulationReport report = mrl::run(sc);
    std::string content;
    if (opts.format == "csv")
        content = mrl::report_to_csv(report);
    else
        content = mrl::report_to_json(report).dump(2) + "\n";
    write_output(opts.output, content);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric mean residual life estimation under right censoring"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mrl::kVersion));

    CommonOptions est_opts, sweep_opts, sim_opts;
    double est_lambda = 0.0;
    bool est_lambda_set = false;
    std::vector<double> sweep_lambdas;
    std::uint64_t seed_value = 0;
    bool seed_set = false;

    const auto add_common = [](CLI::App* cmd, CommonOptions& o, bool grid_flags) {
        cmd->add_option("--input", o.input, "input path")->required();
        cmd->add_option("--output", o.output, "output path (default: stdout)");
        cmd->add_option("--format", o.format, "output format")
            ->check(CLI::IsMember({"csv", "json"}));
        if (grid_flags) {
            cmd->add_option("--grid-points", o.grid_points, "evaluation grid size")
                ->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
            cmd->add_option("--t-max-frac", o.t_max_frac,
                            "grid upper end as a fraction of the last event time")
                ->check(CLI::Range(1e-6, 0.999999));
            cmd->add_option("--alpha", o.alpha, "CI level alpha")
                ->check(CLI::Range(1e-9, 1.0 - 1e-9));
        }
    };

    CLI::App* estimate = app.add_subcommand("estimate", "estimate an MRL curve from CSV data");
    add_common(estimate, est_opts, true);
    estimate->add_option("--lambda", est_lambda, "smoothing rate override (default n/Z_max)")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { est_lambda_set = true; });

    CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo scenario JSON");
    sim_opts.format = "json";
    add_common(simulate, sim_opts, false);
    simulate->add_option("--seed", seed_value, "seed overriding the scenario file")
        ->each([&](const std::string&) { seed_set = true; });

    CLI::App* sweep = app.add_subcommand("sweep", "estimate curves over a list of lambdas");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--lambda", sweep_lambdas, "smoothing rates (repeat or comma-separate)")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error[usage]: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (estimate->parsed())
            return cmd_estimate(est_opts, est_lambda_set ? std::optional<double>(est_lambda)
                                                         : std::nullopt);
        if (simulate->parsed())
            return cmd_simulate(sim_opts, seed_set ? std::optional<std::uint64_t>(seed_value)
                                                   : std::nullopt);
        if (sweep->parsed()) {
            if (sweep_lambdas.empty())
                fail(kExitUsage, "usage", "sweep requires at least one --lambda value");
            return cmd_sweep(sweep_opts, sweep_lambdas);
        }
    } catch (const mrl::error& e) {
        fail_mapped(e);
    } catch (const std::exception& e) {
        fail(kExitNumeric, "numeric", e.what());
    }
    return kExitUsage;
}
