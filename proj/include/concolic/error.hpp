#pragma once

#include <stdexcept>
#include <string>

namespace concolic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input or layer dimensions do not compose.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite or out-of-domain numeric value.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed file or text (model, requirement, suite manifest).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Conflicting or invalid run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Formula evaluation failed (unbound variable, bad index).
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Requirement generation was asked for something ill-formed.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// An LP encoding could not be built from the given pattern.
class EncodingError : public Error {
public:
    using Error::Error;
};

}  // namespace concolic
