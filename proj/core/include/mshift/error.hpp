#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mshift {

// Root of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
class InputError : public Error {
 public:
  using Error::Error;
};

// A propagated marginal vanished, so backward kernels are undefined there.
class ZeroMarginalError : public InputError {
 public:
  ZeroMarginalError(std::size_t step, std::size_t state);
  std::size_t step() const noexcept { return step_; }
  std::size_t state() const noexcept { return state_; }

 private:
  std::size_t step_;
  std::size_t state_;
};

// A standing hypothesis (contraction, ellipticity, conditional bound) fails.
class AssumptionError : public Error {
 public:
  AssumptionError(std::string assumption, std::optional<std::size_t> step,
                  const std::string& detail);
  const std::string& assumption() const noexcept { return assumption_; }
  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::string assumption_;
  std::optional<std::size_t> step_;
};

// Floating-point breakdown: normalizer collapse, ill-conditioning, budgets.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The analysis is not applicable to this input and refuses to guess.
class RefusedError : public Error {
 public:
  using Error::Error;
};

}  // namespace mshift
