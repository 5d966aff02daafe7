#pragma once

#include <stdexcept>
#include <string>

namespace tenseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A member has zero (or non-finite) length; `member()` is its 0-based index.
class DegenerateGeometry : public Error {
public:
    DegenerateGeometry(const std::string& what, int member) : Error(what), member_(member) {}
    int member() const { return member_; }

private:
    int member_;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Raised when the generalized eigenproblem's mass matrix cannot be factored.
class MassError : public Error {
public:
    using Error::Error;
};

class LineSearchError : public Error {
public:
    LineSearchError(const std::string& what, double step) : Error(what), step_(step) {}
    double step() const { return step_; }

private:
    double step_;
};

class InvalidActuation : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch, int batch)
        : Error(what), epoch_(epoch), batch_(batch) {}
    int epoch() const { return epoch_; }
    int batch() const { return batch_; }

private:
    int epoch_;
    int batch_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace tenseg
