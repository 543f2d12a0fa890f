#pragma once

#include <stdexcept>
#include <string>

namespace fbctl {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A size, index or parameter outside its documented domain.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// Monte Carlo estimation could not populate a required bin.
class EstimationFailure : public Error {
  public:
    using Error::Error;
};

/// Singular systems, reducible chains and iteration limits.
class NumericalFailure : public Error {
  public:
    explicit NumericalFailure(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

/// Malformed or inconsistent experiment configuration / input document.
class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace fbctl
