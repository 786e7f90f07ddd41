#pragma once

#include <vector>

#include "regal/errors.hpp"

namespace regal {

/// Feasible sets of the consumption-portfolio problem.  Per state x the
/// consumption propensity ranges over the interval [c_lo, c_hi] intersected
/// with (0,1): the lower end is inclusive, and an upper end of exactly 1
/// stands for the half-open interval [c_lo, 1).  Allocations range over the
/// per-asset box [theta_lo, theta_hi].
///
/// The theory behind the solver wants c_lo > 0; a zero lower bound is
/// accepted here so that the verification checks can classify it, and it
/// fails them.
struct PolicySpace {
  std::vector<double> c_lo, c_hi;          // per state
  std::vector<double> theta_lo, theta_hi;  // [x * n_assets + i]

  double t_lo(int x, int i, int n_assets) const {
    return theta_lo[static_cast<std::size_t>(x) * n_assets + i];
  }
  double t_hi(int x, int i, int n_assets) const {
    return theta_hi[static_cast<std::size_t>(x) * n_assets + i];
  }

  /// 0 <= c_lo <= c_hi <= 1, c_lo < 1, and theta_lo <= theta_hi everywhere.
  void validate(int n_states, int n_assets) const;
};

/// Stationary Markov policy: per-state consumption propensity and
/// allocation vector.
struct Policy {
  std::vector<double> c;      // per state, in (0, 1)
  std::vector<double> theta;  // [x * n_assets + i]

  double t(int x, int i, int n_assets) const {
    return theta[static_cast<std::size_t>(x) * n_assets + i];
  }

  void validate(int n_states, int n_assets) const;
  /// Membership in the policy space at every state (closed-interval check).
  bool feasible(const PolicySpace& space, int n_states, int n_assets) const;
};

}  // namespace regal
