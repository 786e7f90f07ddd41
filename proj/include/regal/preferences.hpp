#pragma once

#include <span>
#include <vector>

#include "regal/errors.hpp"

namespace regal {

/// Preference parameters: discounting, inverse elasticity of intertemporal
/// substitution (rho), relative risk aversion (gamma), loss aversion (k) and
/// per-asset narrow-framing weights (b_i).
///
/// rho or gamma within 1e-9 of 1 is treated as exactly 1: the power branches
/// of the aggregator and certainty equivalent are ill-conditioned near the
/// unit case, so the logarithmic branch takes over there.
struct Preferences {
  double beta = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  double loss_aversion_k = 1.0;
  std::vector<double> framing_weights_b;

  /// Throws validation_error unless 0 < beta < 1, rho > 0, gamma > 0,
  /// k >= 1 and every b_i >= 0.
  void validate() const;

  bool unit_rho() const noexcept;
  bool unit_gamma() const noexcept;

  /// (1 - gamma) / (1 - rho); only meaningful when rho != 1.
  double alpha() const;
};

/// CES aggregator combining current consumption with the certainty
/// equivalent of continuation value:
///
///   H(c, z) = [(1-beta) c^(1-rho) + beta z^(1-rho)]^(1/(1-rho))   rho != 1
///   H(c, z) = exp((1-beta) ln c + beta ln z)                      rho == 1
///
/// Boundary conventions: for rho >= 1, H is extended by its limits, so
/// H(c, 0) = H(0, z) = H(0, 0) = 0.  Negative arguments are rejected here;
/// callers that need the "minus infinity for z < 0" convention implement it
/// themselves.
double aggregate(double c, double z, const Preferences& prefs);

/// One outcome of a discrete distribution.
struct Atom {
  double value = 0.0;
  double prob = 0.0;
};

/// CRRA certainty equivalent u^{-1}(E[u(X)]) of a discrete distribution,
/// with u(x) = x^(1-gamma) for gamma != 1 and u(x) = ln x for gamma == 1.
///
/// Conventions: when gamma >= 1 and an atom of positive probability has
/// value 0, the result is 0.  Probabilities must be nonnegative and sum to
/// 1 within 1e-12 (they are renormalized); otherwise validation_error.
/// The power branch is evaluated in log space (log-sum-exp) so that large
/// gamma with small values does not overflow.
double certainty_equivalent(std::span<const Atom> atoms, const Preferences& prefs);

namespace detail {

/// Certainty equivalent of exp(log_value[s]) under weights w[s] (summing to
/// 1).  A log value of -infinity denotes an exact zero outcome.  Weights of
/// zero are skipped.  Shared by the recursion and Bellman evaluators.
double ce_log_space(std::span<const double> log_values, std::span<const double> weights,
                    double gamma, bool unit_gamma);

}  // namespace detail

}  // namespace regal
