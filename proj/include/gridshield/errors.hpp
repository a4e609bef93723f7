// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gridshield {

/// A set operation that needs a non-empty set (support, hull) got an empty one.
class EmptySetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The LP/QP backend stopped without reaching its tolerances.
/// Distinct from infeasibility, which is a valid answer.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Backward reachability produced an empty safe set; the islanding scenario is
/// ill-posed for the configured components.
class EmptySafeSetError : public std::runtime_error {
public:
  EmptySafeSetError(std::size_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}

  /// Largest index into the safe set sequence whose set is empty.
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

/// No balanced, rate-feasible input keeps the next state inside the target set.
class ShieldInfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Output files or sockets could not be created or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridshield
