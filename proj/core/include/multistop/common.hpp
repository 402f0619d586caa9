#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace multistop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Posterior over hidden states; entries nonnegative and summing to one.
using Belief = Eigen::VectorXd;

enum class Action : int { Stop = 1, Continue = 2 };

inline constexpr int to_int(Action a) noexcept { return static_cast<int>(a); }

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (JSON/TOML/CSV syntax or shape).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Observation with zero probability under the current belief.
class ZeroLikelihoodError : public Error {
 public:
  using Error::Error;
};

/// Value iteration did not reach the requested tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace multistop
