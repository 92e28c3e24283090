#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mrl/errors.hpp"
#include "mrl/mrl_estimator.hpp"
#include "mrl/sample.hpp"
#include "mrl/simulate.hpp"
#include "mrl/step_survival.hpp"
#include "mrl/version.hpp"

namespace mrl {

// Shortest decimal representation that round-trips to the same double.
// Regression fixtures depend on this being byte-stable and locale-free.
inline std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& f : fields) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ' || f.back() == '\t'))
            f.pop_back();
        std::size_t i = 0;
        while (i < f.size() && (f[i] == ' ' || f[i] == '\t')) ++i;
        f.erase(0, i);
    }
    return fields;
}

inline double parse_double_field(const std::string& field, std::size_t line_no,
                                 const std::string& column) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw parse_error("line " + std::to_string(line_no) + ": cannot parse '" + field +
                          "' in column '" + column + "'");
    return v;
}

inline bool parse_event_field(const std::string& field, std::size_t line_no) {
    if (field == "1" || field == "true" || field == "TRUE" || field == "True") return true;
    if (field == "0" || field == "false" || field == "FALSE" || field == "False") return false;
    throw parse_error("line " + std::to_string(line_no) +
                      ": event value '" + field + "' is not 0/1 or true/false");
}

inline void strip_bom(std::string& s) {
    if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
        static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF)
        s.erase(0, 3);
}

}  // namespace detail

// Reads right-censored data from CSV: mandatory header naming the required
// columns `time` and `event` (0/1 or true/false); extra columns are ignored.
inline CensoredSample read_sample_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty file: missing header row");
    detail::strip_bom(line);
    const auto header = detail::split_csv_line(line);
    std::optional<std::size_t> time_col, event_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "time") time_col = i;
        if (header[i] == "event") event_col = i;
    }
    if (!time_col) throw parse_error("missing required column 'time'");
    if (!event_col) throw parse_error("missing required column 'event'");

    std::vector<Observation> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() < header.size())
            throw parse_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        Observation o;
        o.time = detail::parse_double_field(fields[*time_col], line_no, "time");
        o.event = detail::parse_event_field(fields[*event_col], line_no);
        records.push_back(o);
    }
    return CensoredSample::from_records(std::move(records));
}

// --- step survival serialization ---

// Segments as `t_start,t_end,survival`; the final open segment carries
// t_end = inf.
inline std::string step_to_csv(const StepSurvival& step) {
    std::ostringstream out;
    out << "t_start,t_end,survival\n";
    double start = 0.0;
    double value = 1.0;
    for (std::size_t j = 0; j < step.knots.size(); ++j) {
        if (step.knots[j] > start)
            out << fmt_double(start) << ',' << fmt_double(step.knots[j]) << ','
                << fmt_double(value) << '\n';
        start = step.knots[j];
        value = step.values[j];
    }
    out << fmt_double(start) << ",inf," << fmt_double(value) << '\n';
    return out.str();
}

inline std::string weights_to_csv(const StepSurvival& step) {
    std::ostringstream out;
    out << "index,time,event,weight\n";
    for (std::size_t i = 0; i < step.ordered.size(); ++i) {
        out << i + 1 << ',' << fmt_double(step.ordered[i].time) << ','
            << (step.ordered[i].event ? 1 : 0) << ',' << fmt_double(step.stute_weights[i])
            << '\n';
    }
    return out.str();
}

// --- curve serialization ---

struct CurveOutputMeta {
    std::size_t n = 0;
    double lambda = 0.0;
    double censoring_rate = 0.0;
    TieRule tie_rule = TieRule::deaths_first;
    std::optional<std::uint64_t> seed;
};

struct CurveRow {
    MrlPoint point;
    std::optional<double> step_mrl;  // comparison column
};

inline std::string curve_to_csv(const std::vector<CurveRow>& rows, const CurveOutputMeta& meta) {
    std::ostringstream out;
    out << "# n=" << meta.n << '\n';
    out << "# lambda=" << fmt_double(meta.lambda) << '\n';
    out << "# censoring_rate=" << fmt_double(meta.censoring_rate) << '\n';
    out << "# tie_rule=" << to_string(meta.tie_rule) << '\n';
    out << "# tool_version=" << kVersion << '\n';
    if (meta.seed) out << "# seed=" << *meta.seed << '\n';
    out << "t,mrl,stderr,ci_lower,ci_upper,defined,step_mrl\n";
    const auto opt = [](const std::optional<double>& v) {
        return v ? fmt_double(*v) : std::string();
    };
    for (const auto& row : rows) {
        const auto& p = row.point;
        out << fmt_double(p.t) << ',' << opt(p.value) << ',' << opt(p.std_error) << ','
            << opt(p.ci_lower) << ',' << opt(p.ci_upper) << ',' << (p.value ? 1 : 0) << ','
            << opt(row.step_mrl) << '\n';
    }
    return out.str();
}

inline nlohmann::json curve_to_json(const std::vector<CurveRow>& rows,
                                    const CurveOutputMeta& meta) {
    nlohmann::json j;
    j["meta"] = {{"n", meta.n},
                 {"lambda", meta.lambda},
                 {"censoring_rate", meta.censoring_rate},
                 {"tie_rule", to_string(meta.tie_rule)},
                 {"tool_version", kVersion}};
    if (meta.seed) j["meta"]["seed"] = *meta.seed;
    auto& curve = j["curve"] = nlohmann::json::array();
    const auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const auto& row : rows) {
        const auto& p = row.point;
        curve.push_back({{"t", p.t},
                         {"mrl", opt(p.value)},
                         {"stderr", opt(p.std_error)},
                         {"ci_lower", opt(p.ci_lower)},
                         {"ci_upper", opt(p.ci_upper)},
                         {"defined", p.value.has_value()},
                         {"step_mrl", opt(row.step_mrl)}});
    }
    return j;
}

// Parsed back form of the curve CSV (round-trip checks and downstream use).
struct ParsedCurve {
    std::vector<CurveRow> rows;
    std::vector<std::pair<std::string, std::string>> meta;
};

inline ParsedCurve parse_curve_csv(std::istream& in) {
    ParsedCurve out;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos)
                out.meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            if (line != "t,mrl,stderr,ci_lower,ci_upper,defined,step_mrl")
                throw parse_error("unexpected curve header: " + line);
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 7)
            throw parse_error("line " + std::to_string(line_no) + ": expected 7 fields");
        const auto opt = [&](const std::string& f,
                             const char* col) -> std::optional<double> {
            if (f.empty()) return std::nullopt;
            return detail::parse_double_field(f, line_no, col);
        };
        CurveRow row;
        row.point.t = detail::parse_double_field(fields[0], line_no, "t");
        row.point.value = opt(fields[1], "mrl");
        row.point.std_error = opt(fields[2], "stderr");
        row.point.ci_lower = opt(fields[3], "ci_lower");
        row.point.ci_upper = opt(fields[4], "ci_upper");
        row.step_mrl = opt(fields[6], "step_mrl");
        out.rows.push_back(row);
    }
    if (!header_seen) throw parse_error("curve CSV has no header row");
    return out;
}

// --- scenario JSON ---

namespace detail {

inline double require_positive_number(const nlohmann::json& node, const std::string& pointer) {
    if (!node.is_number()) throw schema_error(pointer, "expected a number");
    const double v = node.get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) throw schema_error(pointer, "expected a positive number");
    return v;
}

inline LifetimeLaw parse_lifetime_law(const nlohmann::json& node, const std::string& pointer) {
    if (!node.is_object() || !node.contains("type") || !node["type"].is_string())
        throw schema_error(pointer, "expected an object with a 'type' field");
    const std::string type = node["type"].get<std::string>();
    const auto check_keys = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : node.items()) {
            bool ok = key == "type";
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) throw schema_error(pointer + "/" + key, "unknown field");
        }
    };
    if (type == "exponential") {
        check_keys({"rate"});
        if (!node.contains("rate")) throw schema_error(pointer + "/rate", "missing field");
        return ExponentialLaw{require_positive_number(node["rate"], pointer + "/rate")};
    }
    if (type == "weibull") {
        check_keys({"shape", "scale"});
        if (!node.contains("shape")) throw schema_error(pointer + "/shape", "missing field");
        if (!node.contains("scale")) throw schema_error(pointer + "/scale", "missing field");
        return WeibullLaw{require_positive_number(node["shape"], pointer + "/shape"),
                          require_positive_number(node["scale"], pointer + "/scale")};
    }
    if (type == "uniform") {
        check_keys({"upper"});
        if (!node.contains("upper")) throw schema_error(pointer + "/upper", "missing field");
        return UniformLaw{require_positive_number(node["upper"], pointer + "/upper")};
    }
    throw schema_error(pointer + "/type", "unsupported distribution '" + type + "'");
}

inline CensoringLaw parse_censoring_law(const nlohmann::json& node, const std::string& pointer) {
    if (!node.is_object() || !node.contains("type") || !node["type"].is_string())
        throw schema_error(pointer, "expected an object with a 'type' field");
    if (node["type"].get<std::string>() == "none") {
        for (const auto& [key, value] : node.items())
            if (key != "type") throw schema_error(pointer + "/" + key, "unknown field");
        return NoCensoring{};
    }
    const LifetimeLaw law = parse_lifetime_law(node, pointer);
    if (const auto* e = std::get_if<ExponentialLaw>(&law)) return *e;
    if (const auto* u = std::get_if<UniformLaw>(&law)) return *u;
    throw schema_error(pointer + "/type", "censoring law must be exponential, uniform or none");
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw schema_error("", "scenario must be a JSON object");
    static const std::vector<std::string> known = {
        "lifetime_law", "censoring_law", "n", "replications",
        "t_grid",       "lambda_rule",   "seed", "alpha"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw schema_error("/" + key, "unknown field");
    }
    for (const auto& req : {"lifetime_law", "censoring_law", "n", "replications", "t_grid",
                            "lambda_rule", "alpha"}) {
        if (!j.contains(req)) throw schema_error(std::string("/") + req, "missing field");
    }

    Scenario sc;
    sc.lifetime_law = detail::parse_lifetime_law(j["lifetime_law"], "/lifetime_law");
    sc.censoring_law = detail::parse_censoring_law(j["censoring_law"], "/censoring_law");
    if (!j["n"].is_number_unsigned()) throw schema_error("/n", "expected a nonnegative integer");
    sc.n = j["n"].get<std::size_t>();
    if (!j["replications"].is_number_unsigned())
        throw schema_error("/replications", "expected a nonnegative integer");
    sc.replications = j["replications"].get<std::size_t>();
    if (!j["t_grid"].is_array() || j["t_grid"].empty())
        throw schema_error("/t_grid", "expected a nonempty array of numbers");
    for (std::size_t i = 0; i < j["t_grid"].size(); ++i) {
        if (!j["t_grid"][i].is_number())
            throw schema_error("/t_grid/" + std::to_string(i), "expected a number");
        sc.t_grid.push_back(j["t_grid"][i].get<double>());
    }
    const auto& rule = j["lambda_rule"];
    if (!rule.is_object() || !rule.contains("type") || !rule["type"].is_string())
        throw schema_error("/lambda_rule", "expected an object with a 'type' field");
    const std::string rule_type = rule["type"].get<std::string>();
    if (rule_type == "plug_in") {
        for (const auto& [key, value] : rule.items())
            if (key != "type") throw schema_error("/lambda_rule/" + key, "unknown field");
        sc.lambda_rule = LambdaRule::plug_in;
    } else if (rule_type == "fixed") {
        for (const auto& [key, value] : rule.items())
            if (key != "type" && key != "lambda")
                throw schema_error("/lambda_rule/" + key, "unknown field");
        if (!rule.contains("lambda"))
            throw schema_error("/lambda_rule/lambda", "missing field");
        sc.lambda_rule = LambdaRule::fixed;
        sc.fixed_lambda = detail::require_positive_number(rule["lambda"], "/lambda_rule/lambda");
    } else {
        throw schema_error("/lambda_rule/type", "expected 'plug_in' or 'fixed'");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw schema_error("/seed", "expected a nonnegative integer");
        sc.seed = j["seed"].get<std::uint64_t>();
    }
    if (!j["alpha"].is_number()) throw schema_error("/alpha", "expected a number");
    sc.alpha = j["alpha"].get<double>();
    return sc;
}

inline nlohmann::json law_to_json(const LifetimeLaw& law) {
    if (const auto* e = std::get_if<ExponentialLaw>(&law))
        return {{"type", "exponential"}, {"rate", e->rate}};
    if (const auto* w = std::get_if<WeibullLaw>(&law))
        return {{"type", "weibull"}, {"shape", w->shape}, {"scale", w->scale}};
    const auto& u = std::get<UniformLaw>(law);
    return {{"type", "uniform"}, {"upper", u.upper}};
}

inline nlohmann::json law_to_json(const CensoringLaw& law) {
    if (std::holds_alternative<NoCensoring>(law)) return {{"type", "none"}};
    if (const auto* e = std::get_if<ExponentialLaw>(&law))
        return {{"type", "exponential"}, {"rate", e->rate}};
    const auto& u = std::get<UniformLaw>(law);
    return {{"type", "uniform"}, {"upper", u.upper}};
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json j;
    j["lifetime_law"] = law_to_json(sc.lifetime_law);
    j["censoring_law"] = law_to_json(sc.censoring_law);
    j["n"] = sc.n;
    j["replications"] = sc.replications;
    j["t_grid"] = sc.t_grid;
    if (sc.lambda_rule == LambdaRule::plug_in)
        j["lambda_rule"] = {{"type", "plug_in"}};
    else
        j["lambda_rule"] = {{"type", "fixed"}, {"lambda", sc.fixed_lambda}};
    if (sc.seed) j["seed"] = *sc.seed;
    j["alpha"] = sc.alpha;
    return j;
}

inline nlohmann::json report_to_json(const SimulationReport& report) {
    nlohmann::json j;
    j["scenario"] = scenario_to_json(report.scenario);
    j["summary"] = {{"replications", report.scenario.replications},
                    {"used_replicates", report.used_replicates},
                    {"excluded_replicates", report.excluded_replicates},
                    {"median_sup_error", report.median_sup_error},
                    {"mean_sup_error", report.mean_sup_error},
                    {"tool_version", kVersion}};
    auto& per_t = j["per_t"] = nlohmann::json::array();
    for (const auto& agg : report.per_t) {
        per_t.push_back({{"t", agg.t},
                         {"used", agg.used},
                         {"coverage", agg.coverage},
                         {"error_variance_scaled", agg.error_variance_scaled}});
    }
    auto& reps = j["replicates"] = nlohmann::json::array();
    for (const auto& rec : report.replicates) {
        nlohmann::json r = {{"rep", rec.rep},
                            {"lambda", rec.lambda},
                            {"sup_error", rec.sup_error},
                            {"excluded", rec.excluded}};
        r["failure"] = rec.excluded ? nlohmann::json(rec.failure) : nlohmann::json(nullptr);
        auto& points = r["points"] = nlohmann::json::array();
        for (const auto& p : rec.points) {
            points.push_back({{"t", p.t},
                              {"estimate", p.estimate},
                              {"error", p.error},
                              {"std_error", p.std_error},
                              {"covered", p.covered}});
        }
        reps.push_back(std::move(r));
    }
    return j;
}

// Flat per-(replicate, t) records; excluded replicates contribute no rows.
inline std::string report_to_csv(const SimulationReport& report) {
    std::ostringstream out;
    out << "rep,t,error,std_error,covered\n";
    for (const auto& rec : report.replicates) {
        if (rec.excluded) continue;
        for (const auto& p : rec.points) {
            out << rec.rep << ',' << fmt_double(p.t) << ',' << fmt_double(p.error) << ','
                << fmt_double(p.std_error) << ',' << (p.covered ? 1 : 0) << '\n';
        }
    }
    return out.str();
}

}  // namespace mrl
