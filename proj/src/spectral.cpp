#include "regal/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace regal {

namespace {

constexpr long kMaxPowerIterations = 100000;
constexpr double kRayleighTol = 1e-13;

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

WeightedTransition build_weighted(const MarketModel& model, const FramingSpec& framing,
                                  const Preferences& prefs) {
  const int n = model.n_states();
  WeightedTransition wt;
  wt.n = n;
  wt.additive = prefs.unit_gamma();
  if (wt.additive) {
    wt.w.assign(n, 0.0);
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int y = 0; y < n; ++y) {
        double inner = 0.0;
        for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s)
          inner += model.atom_prob[s] * framing.kappa[s];
        acc += model.chain.p(x, y) * inner;
      }
      if (!std::isfinite(acc))
        throw numerical_error("weighted transition: non-finite drift at state " +
                              std::to_string(x));
      wt.w[x] = acc;
    }
    return wt;
  }
  const double a = 1.0 - prefs.gamma;
  wt.matrix.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      double inner = 0.0;
      for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s)
        inner += model.atom_prob[s] * std::exp(a * framing.kappa[s]);
      const double entry = model.chain.p(x, y) * inner;
      if (!std::isfinite(entry))
        throw numerical_error("weighted transition: non-finite entry at (" + std::to_string(x) +
                              ", " + std::to_string(y) + ")");
      wt.matrix[static_cast<std::size_t>(x) * n + y] = entry;
    }
  return wt;
}

namespace {

// y = M v (+ shift * v)
void mat_vec(const WeightedTransition& wt, double shift, std::span<const double> v,
             std::span<double> out) {
  const int n = wt.n;
  for (int x = 0; x < n; ++x) {
    double acc = shift * v[x];
    const double* row = wt.matrix.data() + static_cast<std::size_t>(x) * n;
    for (int y = 0; y < n; ++y) acc += row[y] * v[y];
    out[x] = acc;
  }
}

double ratio_gap(std::span<const double> w, std::span<const double> v, double eta) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = w[i] / v[i];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return std::max(std::abs(lo - eta), std::abs(hi - eta));
}

}  // namespace

SpectralResult solve_spectral(const WeightedTransition& wt, const MarkovChain& chain,
                              const Preferences& prefs) {
  const int n = wt.n;
  SpectralResult result;

  if (wt.additive) {
    // eta = pi . w; v solves (I - P) v = w - eta 1 with pi . v = 0, via the
    // bordered system [[I-P, 1], [pi^T, 0]].
    const std::vector<double> pi = stationary_distribution(chain);
    double eta = 0.0;
    for (int x = 0; x < n; ++x) eta += pi[x] * wt.w[x];
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = (i == j ? 1.0 : 0.0) - chain.p(i, j);
      A(i, n) = 1.0;
      A(n, i) = pi[i];
      rhs(i) = wt.w[i] - eta;
    }
    rhs(n) = 0.0;
    Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
    result.eta = eta;
    result.v.assign(n, 0.0);
    for (int i = 0; i < n; ++i) result.v[i] = sol(i);
    result.delta = std::exp(eta);
    return result;
  }

  // Power iteration with sup-norm normalization.
  std::vector<double> v(n, 1.0), w(n, 0.0);
  double shift = 0.0;
  double eta = std::numeric_limits<double>::quiet_NaN();
  double eta_prev = eta, eta_prev2 = eta;
  long it = 0;
  for (; it < kMaxPowerIterations; ++it) {
    mat_vec(wt, shift, v, w);
    double vv = 0.0, vw = 0.0;
    for (int i = 0; i < n; ++i) {
      vv += v[i] * v[i];
      vw += v[i] * w[i];
    }
    eta_prev2 = eta_prev;
    eta_prev = eta;
    eta = vw / vv;
    if (!(eta > 0.0) || !std::isfinite(eta))
      throw spectral_error("power iteration produced a nonpositive Rayleigh quotient");

    const bool rayleigh_settled =
        std::isfinite(eta_prev) && std::abs(eta - eta_prev) <= kRayleighTol * std::abs(eta);
    if (rayleigh_settled && ratio_gap(w, v, eta) <= 1e-10 * eta) break;

    // Period-2 oscillation (periodic chain): restart on the shifted,
    // primitive matrix M + s I; eta shifts by s, v is unchanged.
    const bool oscillating = shift == 0.0 && it >= 16 && std::isfinite(eta_prev2) &&
                             std::abs(eta - eta_prev2) <= 1e-12 * std::abs(eta) &&
                             std::abs(eta - eta_prev) > 1e-7 * std::abs(eta);
    if (oscillating || (shift == 0.0 && it == 20000)) {
      shift = eta;
      std::fill(v.begin(), v.end(), 1.0);
      eta = eta_prev = eta_prev2 = std::numeric_limits<double>::quiet_NaN();
      continue;
    }

    const double s = sup_norm(w);
    for (int i = 0; i < n; ++i) v[i] = w[i] / s;
  }
  if (it >= kMaxPowerIterations)
    throw spectral_error("power iteration did not converge in 100000 steps");

  const double s = sup_norm(v);
  for (double& x : v) x /= s;
  result.eta = eta - shift;
  result.v = std::move(v);
  result.iterations = it + 1;
  const double a = 1.0 - prefs.gamma;
  result.delta = std::pow(result.eta, 1.0 / a);
  return result;
}

double collatz_wielandt_gap(const WeightedTransition& wt, const SpectralResult& result) {
  if (wt.additive)
    throw domain_error("collatz_wielandt_gap: defined for the multiplicative (gamma != 1) case");
  std::vector<double> w(wt.n, 0.0);
  mat_vec(wt, 0.0, result.v, w);
  return ratio_gap(w, result.v, result.eta);
}

}  // namespace regal
