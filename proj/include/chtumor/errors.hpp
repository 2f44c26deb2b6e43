// errors.hpp
// Exception types shared by the chtumor headers.

#pragma once

#include <stdexcept>
#include <string>

namespace chtumor {

/// Invalid user-supplied configuration (parameters, grid, scheme, files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A closed-form quantity was requested outside the range where it is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative linear solver hit its iteration cap.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

}  // namespace chtumor
