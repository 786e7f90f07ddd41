#include "regal/utility_fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regal/spectral.hpp"

namespace regal {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStrictMargin = 1e-12;  // floating point cannot certify strict > without one
}  // namespace

bool UtilityFunction::strictly_positive() const {
  for (double v : values)
    if (!(v > 0.0)) return false;
  return !values.empty();
}

bool FramingSpec::has_negative_varpi() const {
  for (double v : varpi)
    if (v < 0.0) return true;
  return false;
}

FramingSpec make_framing(const MarketModel& model,
                         const std::function<double(int, int, int)>& kappa,
                         std::vector<double> varpi) {
  if (varpi.size() != static_cast<std::size_t>(model.n_states()))
    throw validation_error("framing: varpi needs one entry per state");
  FramingSpec spec;
  spec.varpi = std::move(varpi);
  spec.kappa.resize(model.total_atoms());
  for (int x = 0; x < model.n_states(); ++x)
    for (int y = 0; y < model.n_states(); ++y)
      for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s) {
        const double k = kappa(x, y, s - model.slot_begin(x, y));
        if (!std::isfinite(k))
          throw validation_error("framing: kappa not finite at (" + std::to_string(x) + ", " +
                                 std::to_string(y) + ")");
        spec.kappa[s] = k;
      }
  return spec;
}

FramingSpec framing_constant(const MarketModel& model, double kappa_value,
                             std::vector<double> varpi) {
  return make_framing(
      model, [kappa_value](int, int, int) { return kappa_value; }, std::move(varpi));
}

FramingSpec framing_from_policy(const MarketModel& model, const Preferences& prefs,
                                const Policy& policy) {
  const int n = model.n_states();
  policy.validate(n, model.n_assets);
  if (prefs.framing_weights_b.size() != static_cast<std::size_t>(model.n_assets))
    throw validation_error("preferences.framing_weights_b: expected one weight per asset");
  FramingSpec spec;
  spec.kappa.resize(model.total_atoms());
  spec.varpi.resize(n);
  for (int x = 0; x < n; ++x) {
    const double cx = policy.c[x];
    const double log_keep = std::log(1.0 - cx) - std::log(cx);
    std::span<const double> theta{policy.theta.data() + static_cast<std::size_t>(x) * model.n_assets,
                                  static_cast<std::size_t>(model.n_assets)};
    for (int y = 0; y < n; ++y) {
      const double log_cy = std::log(policy.c[y]);
      for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s)
        spec.kappa[s] = log_cy + log_keep + std::log(portfolio_return(model, x, y, s, theta));
    }
    double gl = 0.0;
    for (int i = 0; i < model.n_assets; ++i)
      gl += prefs.framing_weights_b[i] * theta[i] * gain_loss_per_unit(model, prefs, x, i);
    spec.varpi[x] = (1.0 - cx) / cx * gl;
  }
  return spec;
}

namespace {

// CE_x(e^kappa f(X')) for every state; log_f holds ln f (may be -inf).
void recursion_certainty_equivalents(const FramingSpec& framing, const MarketModel& model,
                                     const Preferences& prefs, std::span<const double> log_f,
                                     std::span<double> out) {
  const int n = model.n_states();
  const bool unit_gamma = prefs.unit_gamma();
  std::vector<double> logs, w;
  for (int x = 0; x < n; ++x) {
    logs.clear();
    w.clear();
    for (int y = 0; y < n; ++y) {
      const double pxy = model.chain.p(x, y);
      for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s) {
        logs.push_back(framing.kappa[s] + log_f[y]);
        w.push_back(pxy * model.atom_prob[s]);
      }
    }
    out[x] = detail::ce_log_space(logs, w, prefs.gamma, unit_gamma);
  }
}

std::vector<double> log_values(const UtilityFunction& f) {
  std::vector<double> out(f.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(f.values[i] >= 0.0) || !std::isfinite(f.values[i]))
      throw domain_error("utility function must be finite and nonnegative",
                         {static_cast<int>(i)});
    out[i] = f.values[i] > 0.0 ? std::log(f.values[i]) : -kInf;
  }
  return out;
}

}  // namespace

UtilityFunction apply_recursion(const UtilityFunction& f, const FramingSpec& framing,
                                const MarketModel& model, const Preferences& prefs) {
  const int n = model.n_states();
  if (f.values.size() != static_cast<std::size_t>(n))
    throw validation_error("apply_recursion: utility function has wrong length");
  const std::vector<double> logf = log_values(f);
  std::vector<double> ce(n);
  recursion_certainty_equivalents(framing, model, prefs, logf, ce);
  UtilityFunction out;
  out.values.resize(n);
  std::vector<int> undefined;
  for (int x = 0; x < n; ++x) {
    const double z = ce[x] + framing.varpi[x];
    if (z < 0.0) {
      undefined.push_back(x);
      continue;
    }
    out.values[x] = aggregate(1.0, z, prefs);
  }
  if (!undefined.empty()) {
    std::string msg = "recursion undefined (certainty equivalent plus gain-loss negative) at states";
    for (int x : undefined) msg += " " + std::to_string(x);
    throw domain_error(msg, std::move(undefined));
  }
  return out;
}

GrowthCheck growth_condition(const FramingSpec& framing, const MarketModel& model,
                             const Preferences& prefs) {
  const WeightedTransition wt = build_weighted(model, framing, prefs);
  const SpectralResult sp = solve_spectral(wt, model.chain, prefs);
  GrowthCheck check;
  check.delta = sp.delta;
  if (prefs.unit_rho()) {
    check.product = prefs.beta;
    check.pass = true;
  } else {
    check.product = prefs.beta * std::pow(sp.delta, 1.0 - prefs.rho);
    check.pass = check.product < 1.0;
  }
  return check;
}

UtilityFunction gain_loss_floor(const FramingSpec& framing, const Preferences& prefs) {
  UtilityFunction f0;
  f0.values.reserve(framing.varpi.size());
  for (double v : framing.varpi) f0.values.push_back(aggregate(1.0, std::max(v, 0.0), prefs));
  return f0;
}

UtilityFunction default_start(const FramingSpec& framing, const Preferences& prefs) {
  if (framing.has_negative_varpi()) return gain_loss_floor(framing, prefs);
  UtilityFunction f;
  f.values.assign(framing.varpi.size(), 1.0);
  return f;
}

NegativeFramingCheck check_negative_framing(const FramingSpec& framing, const MarketModel& model,
                                            const Preferences& prefs, int m_max) {
  NegativeFramingCheck check;
  if (!framing.has_negative_varpi()) {
    check.status = NegativeFramingCheck::Status::not_applicable;
    return check;
  }
  const UtilityFunction f0 = gain_loss_floor(framing, prefs);
  const bool shortcut_valid = prefs.gamma < 1.0 || f0.strictly_positive();

  UtilityFunction f = f0;
  bool single_state_improved = false;
  for (int m = 1; m <= m_max; ++m) {
    try {
      f = apply_recursion(f, framing, model, prefs);
    } catch (const domain_error&) {
      check.status = NegativeFramingCheck::Status::fail;
      check.reason = "domain";
      return check;
    }
    bool all_strict = true;
    for (std::size_t x = 0; x < f.values.size(); ++x) {
      if (f.values[x] > f0.values[x] + kStrictMargin) {
        if (m == 1) single_state_improved = true;
      } else {
        all_strict = false;
      }
    }
    if (all_strict) {
      check.status = NegativeFramingCheck::Status::pass;
      check.m = m;
      return check;
    }
  }
  if (shortcut_valid && single_state_improved) {
    // one strictly improved state spreads through the irreducible chain
    check.status = NegativeFramingCheck::Status::pass;
    check.reason = "single-state-improvement";
    return check;
  }
  check.status = NegativeFramingCheck::Status::fail;
  check.reason = "no-strict-improvement";
  return check;
}

IterationReport iterate_recursion(const UtilityFunction& start, const FramingSpec& framing,
                                  const MarketModel& model, const Preferences& prefs,
                                  const IterateOptions& options) {
  IterationReport report;
  report.growth = growth_condition(framing, model, prefs);
  if (framing.has_negative_varpi())
    report.negative_framing = check_negative_framing(framing, model, prefs);

  UtilityFunction f = start;
  std::vector<double> residual_tail;
  for (long it = 1; it <= options.max_iter; ++it) {
    UtilityFunction next = apply_recursion(f, framing, model, prefs);
    double res = 0.0;
    for (std::size_t x = 0; x < f.values.size(); ++x)
      res = std::max(res, std::abs(next.values[x] - f.values[x]));
    if (options.trace) options.trace->push_back(res);
    residual_tail.push_back(res);
    if (residual_tail.size() > 16) residual_tail.erase(residual_tail.begin());
    if (res <= options.tol) {
      report.fixed_point = std::move(next);
      report.iterations = it;
      report.final_residual = res;
      return report;
    }
    if (it == options.max_iter)
      throw iteration_limit_error(
          "utility recursion did not reach tolerance " + std::to_string(options.tol) + " in " +
              std::to_string(options.max_iter) + " iterations",
          next.values, f.values, residual_tail);
    f = std::move(next);
  }
  throw iteration_limit_error("utility recursion: max_iter must be >= 1", f.values, f.values, {});
}

SingletonCensus analyze_singleton(double delta, double varpi, const Preferences& prefs) {
  if (!(delta > 0.0)) throw validation_error("analyze_singleton: delta must be positive");
  const GrowthCheck growth{delta,
                           prefs.unit_rho() ? prefs.beta
                                            : prefs.beta * std::pow(delta, 1.0 - prefs.rho),
                           true};
  if (!(growth.product < 1.0))
    throw domain_error("analyze_singleton: requires beta * delta^(1-rho) < 1");

  SingletonCensus census;
  census.domain_lower = std::max(-varpi / delta, 0.0);
  const double lb = census.domain_lower;

  // T(f) - f; only evaluated at f >= lb, where delta f + varpi >= 0 up to
  // rounding at the boundary itself.
  const auto excess = [&](double f) {
    const double z = std::max(delta * f + varpi, 0.0);
    return aggregate(1.0, z, prefs) - f;
  };

  double ub = std::max(2.0 * lb + 1.0, 1.0);
  while (excess(ub) >= 0.0 && ub < 1e15) ub *= 2.0;

  // concave maximum of the excess splits the domain into two monotone brackets
  double a = lb, b = ub;
  while (b - a > 1e-13 * std::max(1.0, std::abs(b))) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (excess(m1) < excess(m2))
      a = m1;
    else
      b = m2;
  }
  const double peak = 0.5 * (a + b);
  const double peak_value = excess(peak);
  const double scale = std::max(1.0, std::abs(peak));

  const auto bisect = [&](double lo, double hi) {
    // sign change bracketed in [lo, hi]; refine to 1e-12
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const bool same_side = (excess(lo) > 0.0) == (excess(mid) > 0.0);
      (same_side ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  if (peak_value < -1e-13 * scale) {
    census.count = 0;
    return census;
  }
  if (std::abs(peak_value) <= 1e-13 * scale) {
    census.count = 1;
    census.tangency = true;
    census.roots.push_back(peak);
    return census;
  }
  const double at_lb = excess(lb);
  if (at_lb < 0.0) census.roots.push_back(bisect(lb, peak));
  census.roots.push_back(bisect(peak, ub));
  census.count = static_cast<int>(census.roots.size());
  return census;
}

}  // namespace regal
