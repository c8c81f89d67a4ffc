#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmac {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid dimensions, parameters or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Matrix shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The RLS normalizer gamma_k = lambda + phi' P phi became non-positive.
class NumericalBreakdown : public Error {
 public:
  NumericalBreakdown(const std::string& what, double gamma)
      : Error(what), gamma_(gamma) {}
  double gamma() const noexcept { return gamma_; }

 private:
  double gamma_;
};

/// The Riccati solver did not reach a stabilizing solution.
class SynthesisFailure : public Error {
 public:
  SynthesisFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Plant integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace dmac
