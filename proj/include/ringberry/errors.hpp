#pragma once

#include <stdexcept>
#include <string>

namespace ringberry {

// Numerical failure modes surfaced by the library. The CLI maps any of these
// to exit code 3 and sweep drivers record them per row.
enum class errc {
    singular_point,
    no_zero_exists,
    locus_vanished,
    fit_failed,
    quadrature_failure,
    trap_not_formed,
    not_a_minimum,
    majorana_risk,
    connection_singular,
    grid_mismatch,
    step_too_large,
    unwrap_needed,
    no_overlap,
    unfittable,
    inconsistent_runs,
    semiclassical_invalid,
    undefined_angle,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::singular_point: return "singular-point";
        case errc::no_zero_exists: return "no-zero-exists";
        case errc::locus_vanished: return "locus-vanished";
        case errc::fit_failed: return "fit-failed";
        case errc::quadrature_failure: return "quadrature-failure";
        case errc::trap_not_formed: return "trap-not-formed";
        case errc::not_a_minimum: return "not-a-minimum";
        case errc::majorana_risk: return "majorana-risk";
        case errc::connection_singular: return "connection-singular";
        case errc::grid_mismatch: return "grid-mismatch";
        case errc::step_too_large: return "step-too-large";
        case errc::unwrap_needed: return "unwrap-needed";
        case errc::no_overlap: return "no-overlap";
        case errc::unfittable: return "unfittable";
        case errc::inconsistent_runs: return "inconsistent-runs";
        case errc::semiclassical_invalid: return "semiclassical-invalid";
        case errc::undefined_angle: return "undefined-angle";
    }
    return "unknown";
}

class numerical_error : public std::runtime_error {
public:
    numerical_error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

// Configuration / input problems. The CLI maps these to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ringberry
