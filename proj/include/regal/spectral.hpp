#pragma once

#include <vector>

#include "regal/market_model.hpp"
#include "regal/preferences.hpp"
#include "regal/utility_fixed_point.hpp"

namespace regal {

/// Weighted transition data for the spectral problem attached to a framing.
/// For gamma != 1 it is the nonnegative matrix
///   tilde_P(x,y) = P(x,y) * E[u(e^kappa) | x -> y],
/// irreducible whenever the chain is (e^kappa > 0).  For gamma == 1 the
/// problem is additive and only w(x) = E[kappa | x] is needed.
struct WeightedTransition {
  int n = 0;
  bool additive = false;        // gamma == 1 branch
  std::vector<double> matrix;   // row-major, gamma != 1
  std::vector<double> w;        // per state, gamma == 1

  double m(int x, int y) const { return matrix[static_cast<std::size_t>(x) * n + y]; }
};

/// Builds the weighted transition; throws numerical_error naming (x, y) if
/// an entry fails to be finite.
WeightedTransition build_weighted(const MarketModel& model, const FramingSpec& framing,
                                  const Preferences& prefs);

/// Spectral solution.  For gamma != 1: eta is the Perron-Frobenius root of
/// tilde_P and v its positive eigenvector, normalized to sup-norm 1.  For
/// gamma == 1: eta = pi . w and v solves (I - P) v = w - eta 1 with the
/// normalization pi . v = 0.  delta = u^{-1}(eta), i.e. eta^(1/(1-gamma))
/// or e^eta in the additive case.
struct SpectralResult {
  double eta = 0.0;
  std::vector<double> v;
  double delta = 0.0;
  long iterations = 0;
};

/// Power iteration with sup-norm normalization is the primary path
/// (tilde_P is nonnegative irreducible, so the dominant eigenpair is simple
/// and positive); converged when successive Rayleigh quotients differ by
/// < 1e-13 relative and the residual is at eigenvector accuracy.  If the
/// plain iteration oscillates (periodic chain), it restarts on the shifted
/// matrix tilde_P + s I, which is primitive.  Throws spectral_error after
/// 100000 steps.
SpectralResult solve_spectral(const WeightedTransition& wt, const MarkovChain& chain,
                              const Preferences& prefs);

/// Collatz-Wielandt diagnostic for gamma != 1: with ratios r(x) =
/// (tilde_P v)(x) / v(x), returns max(|min_x r - eta|, |max_x r - eta|).
/// The dual bounds bracket eta at any positive v, so a certified eigenpair
/// makes this small (<= 1e-9).
double collatz_wielandt_gap(const WeightedTransition& wt, const SpectralResult& result);

}  // namespace regal
