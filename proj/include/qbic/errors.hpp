#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qbic {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent model or data declaration (dimension mismatch, bad bounds, grid mismatch).
class SpecificationError : public Error {
  public:
    using Error::Error;
};

/// Operation not defined for the given model, e.g. drift of a volatility-only model.
class UnsupportedOperation : public Error {
  public:
    using Error::Error;
};

/// Quasi-likelihood could not be evaluated (non-positive or non-finite diffusion).
class EvaluationError : public Error {
  public:
    using Error::Error;
};

class CriterionError : public Error {
  public:
    using Error::Error;
};

class SelectionError : public Error {
  public:
    using Error::Error;
};

/// Euler path left the finite range (or exceeded the blowup guard).
class SimulationBlowup : public Error {
  public:
    SimulationBlowup(std::size_t step, const std::string& what)
        : Error(what + " at fine step " + std::to_string(step)), step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

/// Malformed configuration; `field` names the offending key path.
class ConfigError : public Error {
  public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

}  // namespace qbic
