#pragma once
/// @file errors.hpp
/// @brief Exception types thrown by the solver library.

#include <stdexcept>
#include <string>

namespace nsv {

/// Violated call contract (wrong grid, wrong component count, bad argument).
struct contract_error : std::invalid_argument {
  explicit contract_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Requested more basis modes than the dealiased lattice provides.
struct capacity_error : std::runtime_error {
  capacity_error(const std::string& msg, int requested_, int available_)
      : std::runtime_error(msg), requested(requested_), available(available_) {}
  int requested;
  int available;
};

/// Advective CFL limit exceeded; carries the offending ratio.
struct cfl_error : std::runtime_error {
  cfl_error(const std::string& msg, double ratio_)
      : std::runtime_error(msg), ratio(ratio_) {}
  double ratio;
};

/// Singular mass matrix.  With kappa = 0 the momentum balance degenerates to
/// an elliptic equation wherever the density vanishes, so the coefficient
/// system loses definiteness; kappa > 0 or a strictly positive density
/// restores it.
struct degeneracy_error : std::runtime_error {
  explicit degeneracy_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value produced by assembly or integration.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed configuration file or unknown key.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nsv
