#include <algorithm>
#include <limits>
#include <map>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "mrl/random_stream.hpp"
#include "mrl/sample.hpp"

using namespace mrl;

TEST_CASE("from_records sorts ascending by time") {
    auto s = CensoredSample::from_records({{2.0, true}, {1.0, false}});
    REQUIRE(s.observations()[0] == Observation{1.0, false});
    REQUIRE(s.observations()[1] == Observation{2.0, true});
}

TEST_CASE("deaths precede censorings at tied times") {
    auto s = CensoredSample::from_records({{3.0, false}, {3.0, true}});
    REQUIRE(s.observations()[0] == Observation{3.0, true});
    REQUIRE(s.observations()[1] == Observation{3.0, false});
}

TEST_CASE("input validation") {
    REQUIRE_THROWS_AS(CensoredSample::from_records({}), empty_input_error);
    REQUIRE_THROWS_AS(CensoredSample::from_records({{1.0, true}, {-0.5, true}}),
                      negative_time_error);
    try {
        CensoredSample::from_records({{1.0, true}, {-0.5, true}});
    } catch (const negative_time_error& e) {
        REQUIRE(e.index == 1);  // index refers to input order
    }
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(CensoredSample::from_records({{inf, true}}), non_finite_time_error);
    REQUIRE_THROWS_AS(CensoredSample::from_records({{nan, true}}), non_finite_time_error);
    REQUIRE_THROWS_AS(CensoredSample::from_records({{1.0, false}, {2.0, false}}),
                      all_censored_error);
}

TEST_CASE("for_diagnostics allows an all-censored sample") {
    auto s = CensoredSample::for_diagnostics({{1.0, false}});
    REQUIRE(censoring_rate(s) == 1.0);
}

TEST_CASE("censoring_rate") {
    REQUIRE(censoring_rate(CensoredSample::from_records({{1, true}, {2, true}})) == 0.0);
    REQUIRE(censoring_rate(CensoredSample::from_records(
                {{1, false}, {2, false}, {3, true}, {4, true}})) == 0.5);
}

TEST_CASE("sample accessors") {
    auto s = CensoredSample::from_records({{1, true}, {4, false}, {3, true}});
    REQUIRE(s.size() == 3);
    REQUIRE(s.event_count() == 2);
    REQUIRE(s.largest_time() == 4.0);
    REQUIRE_FALSE(s.largest_is_event());
    REQUIRE(s.largest_event_time() == 3.0);
    REQUIRE(s.tie_rule() == TieRule::deaths_first);
}

TEST_CASE("sorting preserves the multiset of records") {
    RandomStream rs(404, 0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Observation> records;
        const std::size_t n = 1 + rs.bits(9000 + rep) % 40;
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse times force plenty of ties.
            const double t = static_cast<double>(rs.bits(rep * 100 + i) % 8);
            records.push_back({t, rs.uniform(rep * 100 + 50 + i) < 0.5});
        }
        records[0].event = true;
        std::map<std::pair<double, bool>, int> before;
        for (const auto& o : records) ++before[{o.time, o.event}];
        auto s = CensoredSample::from_records(records);
        std::map<std::pair<double, bool>, int> after;
        for (const auto& o : s.observations()) ++after[{o.time, o.event}];
        REQUIRE(before == after);
        for (std::size_t i = 1; i < s.size(); ++i) {
            const auto& prev = s.observations()[i - 1];
            const auto& cur = s.observations()[i];
            REQUIRE(prev.time <= cur.time);
            if (prev.time == cur.time) REQUIRE((prev.event || !cur.event));
        }
        // Idempotence: re-ingesting the ordered records is a fixed point.
        auto s2 = CensoredSample::from_records(s.observations());
        REQUIRE(s.observations() == s2.observations());
    }
}
