#pragma once

#include <stdexcept>
#include <string>

namespace moncrief {

/// Argument outside the open unit disk or another domain violation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Point not reducible to the fundamental octagon within the word budget.
class OutOfCollarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal invariant (construction self-checks, singular inversions).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Linearized operator lost ellipticity at a node.
class EllipticityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparse factorization or solve failed.
class LinearSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An auxiliary Newton iteration (conformal factor) did not converge.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace moncrief
