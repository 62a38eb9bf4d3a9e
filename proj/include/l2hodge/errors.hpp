#pragma once

#include <stdexcept>
#include <string>

namespace l2hodge {

/// Machine-readable error codes surfaced by the CLI.
enum class errc {
    empty_algebra,
    not_normalized,
    invalid_argument,
    shape_mismatch,
    not_endomorphism,
    not_a_complex,
    eigensolve_failure,
    empty_window,
    nonpositive_density,
    gap_too_small,
    boundary_tie,
    certificate_failed,
    missing_cell_value,
    nonpositive_t,
    relation_violated,
    not_invertible,
    cocycle_violated,
    unknown_group_element,
    unsupported_dimension,
    parse_error,
};

/// Coarse error category driving process exit codes: validation failures
/// exit with 2, numerical-precondition failures with 3.
enum class error_kind { validation, numerical };

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::empty_algebra: return "EmptyAlgebra";
        case errc::not_normalized: return "NotNormalized";
        case errc::invalid_argument: return "InvalidArgument";
        case errc::shape_mismatch: return "ShapeMismatch";
        case errc::not_endomorphism: return "NotEndomorphism";
        case errc::not_a_complex: return "NotAComplex";
        case errc::eigensolve_failure: return "EigensolveFailure";
        case errc::empty_window: return "EmptyWindow";
        case errc::nonpositive_density: return "NonpositiveDensity";
        case errc::gap_too_small: return "GapTooSmall";
        case errc::boundary_tie: return "BoundaryTie";
        case errc::certificate_failed: return "CertificateFailed";
        case errc::missing_cell_value: return "MissingCellValue";
        case errc::nonpositive_t: return "NonpositiveT";
        case errc::relation_violated: return "RelationViolated";
        case errc::not_invertible: return "NotInvertible";
        case errc::cocycle_violated: return "CocycleViolated";
        case errc::unknown_group_element: return "UnknownGroupElement";
        case errc::unsupported_dimension: return "UnsupportedDimension";
        case errc::parse_error: return "ParseError";
    }
    return "Unknown";
}

inline error_kind errc_kind(errc c) {
    switch (c) {
        case errc::gap_too_small:
        case errc::boundary_tie:
        case errc::eigensolve_failure:
            return error_kind::numerical;
        default:
            return error_kind::validation;
    }
}

class Error : public std::runtime_error {
public:
    Error(errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const { return code_; }
    error_kind kind() const { return errc_kind(code_); }
    const char* code_name() const { return errc_name(code_); }

private:
    errc code_;
};

}  // namespace l2hodge
