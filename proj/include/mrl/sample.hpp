#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mrl/errors.hpp"

namespace mrl {

// One right-censored observation: the time Z = min(T, C) and the indicator
// of whether the failure itself was observed (event) or the subject was
// censored first.
struct Observation {
    double time = 0.0;
    bool event = false;  // true = failure observed, false = censored

    friend bool operator==(const Observation&, const Observation&) = default;
};

// Tie convention for equal observation times. Deaths-before-censorings keeps
// the product-limit estimator well-defined: a subject censored at time t is
// still at risk for the failures recorded at t.
enum class TieRule { deaths_first };

inline const char* to_string(TieRule) { return "deaths_first"; }

// Validated, time-ordered right-censored sample. Immutable after
// construction; safe for concurrent reads.
class CensoredSample {
public:
    // Sorts ascending by time with events before censorings at ties,
    // preserving multiplicities. Throws empty_input_error,
    // negative_time_error / non_finite_time_error (index refers to the input
    // order), and all_censored_error.
    static CensoredSample from_records(std::vector<Observation> records) {
        CensoredSample s = for_diagnostics(std::move(records));
        if (s.event_count_ == 0) throw all_censored_error();
        return s;
    }

    // Same ordering and per-record validation, but allows a sample with no
    // events. Only for diagnostics (censoring summaries); the estimators
    // require from_records.
    static CensoredSample for_diagnostics(std::vector<Observation> records) {
        if (records.empty()) throw empty_input_error();
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!std::isfinite(records[i].time)) throw non_finite_time_error(i);
            if (records[i].time < 0.0) throw negative_time_error(i);
        }
        std::stable_sort(records.begin(), records.end(),
                         [](const Observation& a, const Observation& b) {
                             if (a.time != b.time) return a.time < b.time;
                             return a.event && !b.event;  // deaths first
                         });
        CensoredSample s;
        s.obs_ = std::move(records);
        s.event_count_ = static_cast<std::size_t>(
            std::count_if(s.obs_.begin(), s.obs_.end(),
                          [](const Observation& o) { return o.event; }));
        return s;
    }

    const std::vector<Observation>& observations() const { return obs_; }
    std::size_t size() const { return obs_.size(); }
    std::size_t event_count() const { return event_count_; }
    TieRule tie_rule() const { return TieRule::deaths_first; }

    double largest_time() const { return obs_.back().time; }
    bool largest_is_event() const { return obs_.back().event; }

    // Largest time whose failure was actually observed. Requires at least
    // one event (guaranteed by from_records).
    double largest_event_time() const {
        for (auto it = obs_.rbegin(); it != obs_.rend(); ++it)
            if (it->event) return it->time;
        throw all_censored_error();
    }

private:
    std::vector<Observation> obs_;
    std::size_t event_count_ = 0;
};

// Fraction of observations that are censored.
inline double censoring_rate(std::span<const Observation> obs) {
    if (obs.empty()) throw empty_input_error();
    std::size_t censored = 0;
    for (const Observation& o : obs)
        if (!o.event) ++censored;
    return static_cast<double>(censored) / static_cast<double>(obs.size());
}

inline double censoring_rate(const CensoredSample& s) {
    return censoring_rate(std::span<const Observation>(s.observations()));
}

}  // namespace mrl
