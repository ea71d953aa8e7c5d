#pragma once

#include <stdexcept>
#include <string>

namespace slda {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// label outside 1..K
struct BadLabel : Error { using Error::Error; };
// a class with no samples where at least one is required
struct EmptyClass : Error { using Error::Error; };
struct TooFewClasses : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidModel : Error { using Error::Error; };
struct SingularCovariance : Error { using Error::Error; };
// resampling kept producing an empty class
struct EmptyClassAfterRetries : Error { using Error::Error; };
struct BadParameter : Error { using Error::Error; };
// constructed population coefficients are not as row-sparse as requested
struct ModelNotSparse : Error { using Error::Error; };
// exhaustive support enumeration requested beyond the size cap
struct TooLarge : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
// a bound that must hold was violated (maps to a dedicated CLI exit code)
struct CertificateViolation : Error { using Error::Error; };

} // namespace slda
