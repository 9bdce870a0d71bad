#pragma once

#include <stdexcept>
#include <string>

namespace patswarm {

/// Malformed or missing configuration documents (JSON schema violations,
/// unparseable plane specs, absent files).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Runtime domain rejections: an operation refused its inputs
/// (solver rejection, roster shortfall, geometry violations).
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Query point inside the near-field guard radius of a transducer.
struct near_field_error : domain_error {
    using domain_error::domain_error;
};

/// A profile ends before the half-maximum level is crossed.
struct truncated_profile_error : domain_error {
    using domain_error::domain_error;
};

} // namespace patswarm
