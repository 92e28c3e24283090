#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mrl {

// Base class for all library errors. Subclasses identify the failure so
// callers (and the CLI exit-code mapping) can dispatch without string
// matching.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// --- data / input validation ---

class empty_input_error : public error {
public:
    empty_input_error() : error("input contains no observations") {}
};

class negative_time_error : public error {
public:
    explicit negative_time_error(std::size_t index)
        : error("observation " + std::to_string(index) + " has negative time"),
          index(index) {}
    std::size_t index;
};

class non_finite_time_error : public error {
public:
    explicit non_finite_time_error(std::size_t index)
        : error("observation " + std::to_string(index) + " has non-finite time"),
          index(index) {}
    std::size_t index;
};

class all_censored_error : public error {
public:
    all_censored_error()
        : error("sample has no observed events; the product-limit estimator is degenerate") {}
};

// --- numeric / domain guards ---

class not_efron_modified_error : public error {
public:
    not_efron_modified_error()
        : error("operation requires an Efron-modified step function (finite support)") {}
};

class grid_too_short_error : public error {
public:
    grid_too_short_error(std::size_t needed, std::size_t have)
        : error("grid function has " + std::to_string(have) +
                " values but the smoothing window needs index " + std::to_string(needed)),
          needed(needed), have(have) {}
    std::size_t needed;
    std::size_t have;
};

class degenerate_denominator_error : public error {
public:
    explicit degenerate_denominator_error(double t)
        : error("smoothed survival below the denominator floor at t=" + std::to_string(t)),
          t(t) {}
    double t;
};

class domain_exceeded_error : public error {
public:
    explicit domain_exceeded_error(double t)
        : error("t=" + std::to_string(t) + " is at or beyond the last event time"),
          t(t) {}
    double t;
};

class invalid_grid_error : public error {
public:
    explicit invalid_grid_error(const std::string& what) : error("invalid grid: " + what) {}
};

class tail_divergence_error : public error {
public:
    explicit tail_divergence_error(double x)
        : error("censoring-tail functional diverges beyond the largest (censored) "
                "observation at x=" + std::to_string(x)),
          x(x) {}
    double x;
};

class outside_support_error : public error {
public:
    explicit outside_support_error(double t)
        : error("t=" + std::to_string(t) + " lies outside the distribution support"),
          t(t) {}
    double t;
};

class unsupported_distribution_error : public error {
public:
    explicit unsupported_distribution_error(const std::string& name)
        : error("unsupported distribution: " + name) {}
};

// --- external-format errors (CSV / JSON schemas) ---

class parse_error : public error {
public:
    explicit parse_error(const std::string& what) : error(what) {}
};

class schema_error : public error {
public:
    schema_error(const std::string& pointer, const std::string& what)
        : error(what + " (at " + pointer + ")"), pointer(pointer) {}
    std::string pointer;  // JSON pointer of the offending field
};

}  // namespace mrl
