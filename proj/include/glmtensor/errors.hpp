#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace glmtensor {

// Invalid user-supplied argument or configuration value.
class invalid_argument : public std::invalid_argument {
 public:
  explicit invalid_argument(const std::string& msg) : std::invalid_argument(msg) {}
};

// A request that is well-formed but outside what the implementation supports
// (e.g. continuous priors in the enumeration oracle).
class unsupported_error : public invalid_argument {
 public:
  explicit unsupported_error(const std::string& msg) : invalid_argument(msg) {}
};

// Non-finite value produced during a numeric evaluation. Carries the point
// at which the integrand/update blew up, when known.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
  numeric_error(const std::string& msg, std::vector<double> node)
      : std::runtime_error(msg), node_(std::move(node)) {}

  const std::vector<double>& node() const { return node_; }

 private:
  std::vector<double> node_;
};

// Fixed-point iteration failed on every start and the grid fallback could
// not produce a finite candidate. what() contains per-start diagnostics.
class solver_error : public std::runtime_error {
 public:
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace glmtensor
