#pragma once

#include <stdexcept>
#include <string>

namespace satcon {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed matrices, scenarios, or preconditions the caller
/// is responsible for. CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerically certified property failed beyond tolerance. CLI exit code 2.
class CertificateFailure : public Error {
public:
    using Error::Error;
};

/// Failure while running: divergence, solver breakdown, suspected Zeno.
/// CLI exit code 3.
class RuntimeFailure : public Error {
public:
    using Error::Error;
};

struct NonSquare : ValidationError { using ValidationError::ValidationError; };
struct NegativeWeight : ValidationError { using ValidationError::ValidationError; };
struct NonzeroDiagonal : ValidationError { using ValidationError::ValidationError; };
struct NoSpanningTree : ValidationError { using ValidationError::ValidationError; };
struct NotIrreducible : ValidationError { using ValidationError::ValidationError; };
struct DimensionMismatch : ValidationError { using ValidationError::ValidationError; };
struct NonFiniteInput : ValidationError { using ValidationError::ValidationError; };
struct NoPositiveEigenvalue : ValidationError { using ValidationError::ValidationError; };
struct RequiresDecayFit : ValidationError { using ValidationError::ValidationError; };

struct EigensolverFailure : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct NonFiniteState : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct ZenoSuspected : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct BracketFailure : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };

struct NeverExitsSaturation : CertificateFailure { using CertificateFailure::CertificateFailure; };

}  // namespace satcon
