#include "regal/preferences.hpp"

#include <cmath>
#include <limits>

namespace regal {

namespace {
constexpr double kUnitSnap = 1e-9;
constexpr double kProbTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void Preferences::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw validation_error("preferences.beta: must lie in (0,1)");
  if (!(rho > 0.0)) throw validation_error("preferences.rho: must be positive");
  if (!(gamma > 0.0)) throw validation_error("preferences.gamma: must be positive");
  if (!(loss_aversion_k >= 1.0))
    throw validation_error("preferences.loss_aversion_k: must be >= 1");
  for (std::size_t i = 0; i < framing_weights_b.size(); ++i)
    if (!(framing_weights_b[i] >= 0.0))
      throw validation_error("preferences.framing_weights_b[" + std::to_string(i) +
                             "]: must be nonnegative");
}

bool Preferences::unit_rho() const noexcept { return std::abs(rho - 1.0) <= kUnitSnap; }
bool Preferences::unit_gamma() const noexcept { return std::abs(gamma - 1.0) <= kUnitSnap; }

double Preferences::alpha() const {
  if (unit_rho()) throw domain_error("alpha undefined for rho == 1");
  return (1.0 - gamma) / (1.0 - rho);
}

double aggregate(double c, double z, const Preferences& prefs) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw domain_error("aggregate: c must be finite and nonnegative");
  if (!(z >= 0.0) || !std::isfinite(z))
    throw domain_error("aggregate: z must be finite and nonnegative");
  const double beta = prefs.beta;
  if (prefs.unit_rho()) {
    if (c == 0.0 || z == 0.0) return 0.0;
    return std::exp((1.0 - beta) * std::log(c) + beta * std::log(z));
  }
  const double e = 1.0 - prefs.rho;
  if (e < 0.0 && (c == 0.0 || z == 0.0)) return 0.0;  // limit convention for rho > 1
  return std::pow((1.0 - beta) * std::pow(c, e) + beta * std::pow(z, e), 1.0 / e);
}

namespace detail {

double ce_log_space(std::span<const double> log_values, std::span<const double> weights,
                    double gamma, bool unit_gamma) {
  const std::size_t n = log_values.size();
  if (unit_gamma) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] == 0.0) continue;
      if (log_values[i] == -kInf) return 0.0;
      s += weights[i] * log_values[i];
    }
    return std::exp(s);
  }
  const double a = 1.0 - gamma;
  double m = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    if (log_values[i] == -kInf) {
      if (gamma > 1.0) return 0.0;  // u(0) = +inf carries the expectation to +inf
      continue;                     // gamma < 1: zero outcomes contribute nothing
    }
    m = std::max(m, a * log_values[i]);
  }
  if (m == -kInf) return 0.0;  // all mass on zero outcomes
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0 || log_values[i] == -kInf) continue;
    s += weights[i] * std::exp(a * log_values[i] - m);
  }
  return std::exp((m + std::log(s)) / a);
}

}  // namespace detail

double certainty_equivalent(std::span<const Atom> atoms, const Preferences& prefs) {
  if (atoms.empty()) throw validation_error("certainty_equivalent: empty distribution");
  double psum = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i].prob >= 0.0))
      throw validation_error("certainty_equivalent: atoms[" + std::to_string(i) +
                             "].prob: must be nonnegative");
    if (!(atoms[i].value >= 0.0))
      throw validation_error("certainty_equivalent: atoms[" + std::to_string(i) +
                             "].value: must be nonnegative");
    psum += atoms[i].prob;
  }
  if (std::abs(psum - 1.0) > kProbTol)
    throw validation_error("certainty_equivalent: probabilities sum to " + std::to_string(psum) +
                           ", not 1 within 1e-12");

  // Degenerate distributions return their point value exactly.
  bool degenerate = true;
  double point = -1.0;
  for (const Atom& a : atoms) {
    if (a.prob == 0.0) continue;
    if (point < 0.0)
      point = a.value;
    else if (a.value != point)
      degenerate = false;
  }
  if (degenerate && point >= 0.0) return point;

  std::vector<double> logs(atoms.size());
  std::vector<double> w(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    logs[i] = atoms[i].value > 0.0 ? std::log(atoms[i].value) : -kInf;
    w[i] = atoms[i].prob / psum;
  }
  return detail::ce_log_space(logs, w, prefs.gamma, prefs.unit_gamma());
}

}  // namespace regal
