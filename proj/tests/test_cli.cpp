// End-to-end tests driving the mrl binary; the path comes from MRL_CLI_BIN
// (set by CMake).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "mrl/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "mrl_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("MRL_CLI_BIN");
    REQUIRE(bin != nullptr);
    const fs::path out_path = work_dir() / "stdout.txt";
    const fs::path err_path = work_dir() / "stderr.txt";
    const std::string cmd = std::string(bin) + " " + args + " > " + out_path.string() +
                            " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = (status >= 0) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_path);
    r.err = read_file(err_path);
    return r;
}

fs::path write_file(const std::string& name, const std::string& content) {
    const fs::path p = work_dir() / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
}

const std::string kFixtureCsv = "time,event\n1,1\n2,0\n3,1\n4,1\n";

std::string smoke_scenario_json(int replications, bool with_seed) {
    std::ostringstream ss;
    ss << R"({"lifetime_law": {"type": "exponential", "rate": 1.0},)"
       << R"( "censoring_law": {"type": "exponential", "rate": 0.5},)"
       << R"( "n": 40, "replications": )" << replications
       << R"(, "t_grid": [0.5], "lambda_rule": {"type": "plug_in"},)";
    if (with_seed) ss << R"( "seed": 7,)";
    ss << R"( "alpha": 0.05})";
    return ss.str();
}

}  // namespace

TEST_CASE("estimate produces the fixture step MRL at t=2") {
    const fs::path input = write_file("fixture.csv", kFixtureCsv);
    const fs::path output = work_dir() / "curve.csv";
    // t-max-frac 0.5 of the last event (4) with two grid points puts the
    // grid exactly at {0, 2}.
    auto r = run_cli("estimate --input " + input.string() + " --output " + output.string() +
                     " --grid-points 2 --t-max-frac 0.5");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    std::ifstream in(output);
    auto parsed = mrl::parse_curve_csv(in);
    REQUIRE(parsed.rows.size() == 2);
    REQUIRE(parsed.rows[0].point.t == 0.0);
    REQUIRE(parsed.rows[0].step_mrl.value() == 2.875);
    REQUIRE(parsed.rows[1].point.t == 2.0);
    REQUIRE(parsed.rows[1].step_mrl.value() == 1.5);
    REQUIRE(parsed.rows[1].point.value.has_value());
    REQUIRE(parsed.rows[1].point.ci_lower.value() <= parsed.rows[1].point.value.value());
    REQUIRE(parsed.rows[1].point.ci_upper.value() >= parsed.rows[1].point.value.value());
}

TEST_CASE("estimate reports a missing column and writes no output") {
    const fs::path input = write_file("bad.csv", "time,status\n1,1\n");
    const fs::path output = work_dir() / "never.csv";
    auto r = run_cli("estimate --input " + input.string() + " --output " + output.string());
    REQUIRE(r.exit_code == 3);
    REQUIRE(r.err.find("event") != std::string::npos);
    REQUIRE_FALSE(fs::exists(output));
}

TEST_CASE("estimate records the lambda override in the meta block") {
    const fs::path input = write_file("fixture.csv", kFixtureCsv);
    auto r = run_cli("estimate --input " + input.string() +
                     " --lambda 1000 --grid-points 5 --format json");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["meta"]["lambda"] == 1000.0);
    REQUIRE(j["meta"]["n"] == 4);
    REQUIRE(j["meta"]["censoring_rate"] == 0.25);
    REQUIRE(j["meta"]["tie_rule"] == "deaths_first");
    REQUIRE(j["meta"]["tool_version"] == mrl::kVersion);
}

TEST_CASE("estimate round trip: output reparses to identical numbers") {
    const fs::path input = write_file("fixture.csv", kFixtureCsv);
    auto first = run_cli("estimate --input " + input.string() + " --grid-points 20");
    REQUIRE(first.exit_code == 0);
    std::istringstream in1(first.out);
    auto parsed = mrl::parse_curve_csv(in1);
    // Re-serialize: every numeric survives the text round trip exactly.
    mrl::CurveOutputMeta meta;
    const std::string again = mrl::curve_to_csv(parsed.rows, meta);
    std::istringstream in2(again);
    auto reparsed = mrl::parse_curve_csv(in2);
    for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
        REQUIRE(reparsed.rows[i].point.t == parsed.rows[i].point.t);
        REQUIRE(reparsed.rows[i].point.value == parsed.rows[i].point.value);
        REQUIRE(reparsed.rows[i].point.std_error == parsed.rows[i].point.std_error);
    }
}

TEST_CASE("sweep with a single lambda matches estimate modulo the lambda column") {
    const fs::path input = write_file("fixture.csv", kFixtureCsv);
    auto est = run_cli("estimate --input " + input.string() +
                       " --lambda 500 --grid-points 8 --t-max-frac 0.5");
    auto swp = run_cli("sweep --input " + input.string() +
                       " --lambda 500 --grid-points 8 --t-max-frac 0.5");
    REQUIRE(est.exit_code == 0);
    REQUIRE(swp.exit_code == 0);
    std::istringstream est_in(est.out);
    auto est_rows = mrl::parse_curve_csv(est_in).rows;
    std::size_t row = 0;
    std::istringstream swp_in(swp.out);
    std::string line;
    bool header_passed = false;
    while (std::getline(swp_in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_passed) {
            REQUIRE(line == "lambda,t,mrl,stderr,ci_lower,ci_upper,defined,step_mrl");
            header_passed = true;
            continue;
        }
        REQUIRE(line.substr(0, 4) == "500,");
        // Dropping the lambda column reproduces the estimate rows.
        const std::string rest = line.substr(4);
        std::ostringstream expect;
        const auto& p = est_rows[row].point;
        const auto opt = [](const std::optional<double>& v) {
            return v ? mrl::fmt_double(*v) : std::string();
        };
        expect << mrl::fmt_double(p.t) << ',' << opt(p.value) << ',' << opt(p.std_error)
               << ',' << opt(p.ci_lower) << ',' << opt(p.ci_upper) << ','
               << (p.value ? 1 : 0) << ',' << opt(est_rows[row].step_mrl);
        REQUIRE(rest == expect.str());
        ++row;
    }
    REQUIRE(row == est_rows.size());
}

TEST_CASE("sweep without lambdas is a usage error") {
    const fs::path input = write_file("fixture.csv", kFixtureCsv);
    auto r = run_cli("sweep --input " + input.string());
    REQUIRE(r.exit_code == 2);
}

TEST_CASE("sweep ladder approaches the step MRL") {
    const fs::path input = write_file("fixture.csv", kFixtureCsv);
    auto r = run_cli("sweep --input " + input.string() +
                     " --lambda 100,1000,10000,100000 --grid-points 2 --t-max-frac 0.5 "
                     "--format json");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["curves"].size() == 4);
    double prev = 1e9;
    for (const auto& c : j["curves"]) {
        const double mrl_val = c["curve"][1]["mrl"].get<double>();
        const double err = std::abs(mrl_val - c["curve"][1]["step_mrl"].get<double>());
        REQUIRE(err < prev);
        prev = err;
    }
    REQUIRE(prev < 0.02);
}

TEST_CASE("simulate smoke run and determinism") {
    const fs::path scenario = write_file("scenario.json", smoke_scenario_json(1, true));
    const fs::path out1 = work_dir() / "rep1.json";
    const fs::path out2 = work_dir() / "rep2.json";
    auto r1 = run_cli("simulate --input " + scenario.string() + " --output " + out1.string());
    CAPTURE(r1.err);
    REQUIRE(r1.exit_code == 0);
    auto j = nlohmann::json::parse(read_file(out1));
    REQUIRE(j["summary"]["used_replicates"].get<int>() +
                j["summary"]["excluded_replicates"].get<int>() ==
            1);
    auto r2 = run_cli("simulate --input " + scenario.string() + " --output " + out2.string());
    REQUIRE(r2.exit_code == 0);
    REQUIRE(read_file(out1) == read_file(out2));  // byte-identical
}

TEST_CASE("simulate reports schema violations with a JSON pointer") {
    std::string bad = smoke_scenario_json(1, true);
    const auto pos = bad.find("censoring_law");
    bad.replace(pos, std::string("censoring_law").size(), "censoring_las");
    const fs::path scenario = write_file("bad_scenario.json", bad);
    auto r = run_cli("simulate --input " + scenario.string());
    REQUIRE(r.exit_code == 3);
    REQUIRE(r.err.find("/censoring_la") != std::string::npos);
}

TEST_CASE("simulate without any seed is a usage error") {
    const fs::path scenario = write_file("noseed.json", smoke_scenario_json(1, false));
    auto r = run_cli("simulate --input " + scenario.string());
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.err.find("seed") != std::string::npos);
    // Supplying --seed fixes it.
    auto ok = run_cli("simulate --input " + scenario.string() + " --seed 11 --format csv");
    REQUIRE(ok.exit_code == 0);
    REQUIRE(ok.out.rfind("rep,t,error,std_error,covered", 0) == 0);
}

TEST_CASE("unknown flags and missing input are usage errors") {
    auto r = run_cli("estimate --no-such-flag");
    REQUIRE(r.exit_code == 2);
    auto r2 = run_cli("estimate");
    REQUIRE(r2.exit_code == 2);
    auto r3 = run_cli("estimate --input /nonexistent/path.csv");
    REQUIRE(r3.exit_code == 3);
}
