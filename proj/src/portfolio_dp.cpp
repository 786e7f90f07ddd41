#include "regal/portfolio_dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "regal/utility_fixed_point.hpp"

namespace regal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoordinateWidth = 1e-12;  // ternary interval target per coordinate
constexpr double kSweepTol = 1e-13;         // stop when a full sweep improves less
constexpr double kTieTol = 1e-13;           // value ties break to the smaller argument

// Evaluates theta -> gain-loss term + CE_x(R_theta * Phi(X')) with the
// state-x pieces (weights, b_i g_i(x), ln Phi) precomputed once.
class ContinuationEvaluator {
public:
  ContinuationEvaluator(const MarketModel& model, const Preferences& prefs, int x,
                        std::span<const double> Phi, bool with_gain_loss = true)
      : model_(model), prefs_(prefs), x_(x) {
    const int n = model.n_states();
    bg_.resize(model.n_assets);
    for (int i = 0; i < model.n_assets; ++i)
      bg_[i] = with_gain_loss && !prefs.framing_weights_b.empty()
                   ? prefs.framing_weights_b[i] * gain_loss_per_unit(model, prefs, x, i)
                   : 0.0;
    const int row_begin = model.slot_begin(x, 0);
    const int row_end = model.slot_end(x, n - 1);
    w_.reserve(row_end - row_begin);
    log_phi_.reserve(row_end - row_begin);
    for (int y = 0; y < n; ++y) {
      const double pxy = model.chain.p(x, y);
      const double lp = Phi.empty() ? 0.0
                        : Phi[y] > 0.0 ? std::log(Phi[y])
                                       : -kInf;
      for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s) {
        w_.push_back(pxy * model.atom_prob[s]);
        log_phi_.push_back(lp);
        slot_.push_back(s);
      }
    }
    logs_.resize(w_.size());
  }

  const std::vector<double>& gain_loss_coefficients() const { return bg_; }

  double operator()(std::span<const double> theta) const {
    const double rf = model_.risk_free[x_];
    double gl = 0.0;
    for (int i = 0; i < model_.n_assets; ++i) gl += bg_[i] * theta[i];
    for (std::size_t idx = 0; idx < slot_.size(); ++idx) {
      const int s = slot_[idx];
      double r = rf;
      for (int i = 0; i < model_.n_assets; ++i) r += theta[i] * (model_.asset_r(i, s) - rf);
      if (!(r > 0.0))
        throw infeasible_return_error("portfolio return nonpositive at state " +
                                      std::to_string(x_) + ", atom slot " + std::to_string(s));
      logs_[idx] = std::log(r) + log_phi_[idx];
    }
    return gl + detail::ce_log_space(logs_, w_, prefs_.gamma, prefs_.unit_gamma());
  }

private:
  const MarketModel& model_;
  const Preferences& prefs_;
  int x_;
  std::vector<double> bg_;
  std::vector<double> w_, log_phi_;
  std::vector<int> slot_;
  mutable std::vector<double> logs_;
};

// Cyclic per-coordinate ternary search of a concave function over a box.
// Bounds are candidates in every coordinate pass, so boundary maximizers
// come out exactly at the bound; ties go to the smaller coordinate value.
template <typename F>
std::pair<std::vector<double>, double> maximize_over_box(const F& f, std::span<const double> lo,
                                                         std::span<const double> hi) {
  const int n = static_cast<int>(lo.size());
  std::vector<double> theta(n);
  for (int i = 0; i < n; ++i) theta[i] = 0.5 * (lo[i] + hi[i]);
  double value = f(theta);
  if (n == 0) return {theta, value};
  for (int sweep = 0; sweep < 256; ++sweep) {
    const double sweep_start = value;
    for (int i = 0; i < n; ++i) {
      double a = lo[i], b = hi[i];
      if (b - a > kCoordinateWidth) {
        while (b - a > kCoordinateWidth) {
          const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
          theta[i] = m1;
          const double f1 = f(theta);
          theta[i] = m2;
          const double f2 = f(theta);
          if (f1 < f2)
            a = m1;
          else
            b = m2;
        }
      }
      // evaluate the exact bounds and the interior candidate, smallest
      // first; an interior candidate whose interval collapsed onto a bound
      // is that bound
      double mid = 0.5 * (a + b);
      if (hi[i] - mid <= kCoordinateWidth) mid = hi[i];
      if (mid - lo[i] <= kCoordinateWidth) mid = lo[i];
      const double cands[3] = {lo[i], mid, hi[i]};
      double best_v = -kInf, best_t = lo[i];
      for (double c : cands) {
        theta[i] = c;
        const double v = f(theta);
        if (v > best_v + kTieTol) {
          best_v = v;
          best_t = c;
        }
      }
      theta[i] = best_t;
      value = best_v;
    }
    if (value - sweep_start < kSweepTol) break;
  }
  return {theta, value};
}

double corner_min_linear(std::span<const double> coef, std::span<const double> lo,
                         std::span<const double> hi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) acc += std::min(coef[i] * lo[i], coef[i] * hi[i]);
  return acc;
}

double corner_max_linear(std::span<const double> coef, std::span<const double> lo,
                         std::span<const double> hi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) acc += std::max(coef[i] * lo[i], coef[i] * hi[i]);
  return acc;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Visits box vertices (all of them up to 2^cap, a deterministic sample
// beyond) and feeds each to `visit`.
template <typename Visit>
void for_each_vertex(std::span<const double> lo, std::span<const double> hi, int cap,
                     const Visit& visit) {
  const int n = static_cast<int>(lo.size());
  std::vector<double> v(n);
  if (n <= cap) {
    const std::uint64_t count = 1ull << n;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1 ? hi[i] : lo[i];
      visit(v);
    }
  } else {
    const std::uint64_t count = 1ull << cap;
    for (std::uint64_t k = 0; k < count; ++k) {
      const std::uint64_t bits = splitmix64(k);
      for (int i = 0; i < n; ++i) v[i] = (bits >> (i % 64)) & 1 ? hi[i] : lo[i];
      visit(v);
    }
  }
}

std::span<const double> state_lo(const PolicySpace& space, int x, int na) {
  return {space.theta_lo.data() + static_cast<std::size_t>(x) * na, static_cast<std::size_t>(na)};
}
std::span<const double> state_hi(const PolicySpace& space, int x, int na) {
  return {space.theta_hi.data() + static_cast<std::size_t>(x) * na, static_cast<std::size_t>(na)};
}

}  // namespace

double continuation_value(const MarketModel& model, const Preferences& prefs, int x,
                          std::span<const double> theta, std::span<const double> Phi) {
  if (theta.size() != static_cast<std::size_t>(model.n_assets))
    throw validation_error("continuation_value: allocation has wrong length");
  if (Phi.size() != static_cast<std::size_t>(model.n_states()))
    throw validation_error("continuation_value: value function has wrong length");
  const ContinuationEvaluator eval(model, prefs, x, Phi);
  return eval(theta);
}

std::pair<std::vector<double>, double> maximize_allocation(const MarketModel& model,
                                                           const Preferences& prefs,
                                                           const PolicySpace& space, int x,
                                                           std::span<const double> Phi) {
  const ContinuationEvaluator eval(model, prefs, x, Phi);
  return maximize_over_box([&](const std::vector<double>& t) { return eval(t); },
                           state_lo(space, x, model.n_assets), state_hi(space, x, model.n_assets));
}

std::pair<double, double> maximize_consumption(const Preferences& prefs, double lo, double hi,
                                               double y) {
  if (!(y >= 0.0)) throw domain_error("maximize_consumption: continuation value must be >= 0");
  if (y > 0.0) {
    double interior;
    if (prefs.unit_rho()) {
      interior = 1.0 - prefs.beta;
    } else {
      interior = 1.0 / (1.0 + std::pow(y, (1.0 - prefs.rho) / prefs.rho) *
                                  std::pow(prefs.beta / (1.0 - prefs.beta), 1.0 / prefs.rho));
    }
    const double c = std::clamp(interior, lo, hi);
    return {c, aggregate(c, (1.0 - c) * y, prefs)};
  }
  // y == 0: H(c, 0) grows in c below unit rho and is identically 0 otherwise.
  // An upper endpoint of 1 stands for the supremum over [lo, 1), whose value
  // is the c -> 1 limit H(1, 0).
  if (prefs.rho < 1.0 && !prefs.unit_rho()) return {hi, aggregate(hi, 0.0, prefs)};
  return {hi, 0.0};
}

BellmanResult apply_bellman(const MarketModel& model, const Preferences& prefs,
                            const PolicySpace& space, std::span<const double> Phi) {
  const int n = model.n_states();
  BellmanResult out;
  out.Phi.resize(n);
  out.greedy.c.resize(n);
  out.greedy.theta.resize(static_cast<std::size_t>(n) * model.n_assets);
  std::vector<int> bad;
  for (int x = 0; x < n; ++x) {
    auto [theta, best] = maximize_allocation(model, prefs, space, x, Phi);
    if (best < 0.0) {
      bad.push_back(x);
      continue;
    }
    const auto [c, value] = maximize_consumption(prefs, space.c_lo[x], space.c_hi[x], best);
    out.Phi[x] = value;
    out.greedy.c[x] = c;
    std::copy(theta.begin(), theta.end(),
              out.greedy.theta.begin() + static_cast<std::size_t>(x) * model.n_assets);
  }
  if (!bad.empty()) {
    std::string msg = "Bellman map undefined (best continuation value negative) at states";
    for (int x : bad) msg += " " + std::to_string(x);
    throw domain_error(msg, std::move(bad));
  }
  return out;
}

std::vector<double> seed_value_function(const MarketModel& model, const Preferences& prefs,
                                        const PolicySpace& space) {
  const int n = model.n_states();
  const int na = model.n_assets;
  std::vector<double> Phi0(n);
  std::vector<double> coef(na);
  for (int x = 0; x < n; ++x) {
    for (int i = 0; i < na; ++i)
      coef[i] = prefs.framing_weights_b[i] * gain_loss_per_unit(model, prefs, x, i);
    const double inner =
        std::max(corner_max_linear(coef, state_lo(space, x, na), state_hi(space, x, na)), 0.0);
    Phi0[x] = maximize_consumption(prefs, space.c_lo[x], space.c_hi[x], inner).second;
  }
  return Phi0;
}

bool nonnegative_gain_loss_certified(const MarketModel& model, const Preferences& prefs,
                                     const PolicySpace& space) {
  const int na = model.n_assets;
  std::vector<double> coef(na);
  for (int x = 0; x < model.n_states(); ++x) {
    for (int i = 0; i < na; ++i)
      coef[i] = prefs.framing_weights_b[i] * gain_loss_per_unit(model, prefs, x, i);
    if (corner_min_linear(coef, state_lo(space, x, na), state_hi(space, x, na)) < 0.0) return false;
  }
  return true;
}

BellmanReport solve_bellman(const MarketModel& model, const Preferences& prefs,
                            const PolicySpace& space, const BellmanOptions& options) {
  const int n = model.n_states();
  space.validate(n, model.n_assets);
  BellmanReport report;
  std::vector<double> Phi;
  if (options.start.has_value()) {
    Phi = *options.start;
    if (Phi.size() != static_cast<std::size_t>(n))
      throw validation_error("solve_bellman: start vector has wrong length");
  } else if (nonnegative_gain_loss_certified(model, prefs, space)) {
    Phi.assign(n, 1.0);
  } else {
    Phi = seed_value_function(model, prefs, space);
    report.started_from_seed = true;
  }

  std::vector<double> residual_tail;
  for (long it = 1; it <= options.max_iter; ++it) {
    BellmanResult step = apply_bellman(model, prefs, space, Phi);
    double res = 0.0;
    for (int x = 0; x < n; ++x) res = std::max(res, std::abs(step.Phi[x] - Phi[x]));
    if (options.trace) options.trace->push_back(res);
    residual_tail.push_back(res);
    if (residual_tail.size() > 16) residual_tail.erase(residual_tail.begin());
    if (res <= options.tol) {
      // one more pass extracts the greedy policy at the fixed point itself
      BellmanResult at_fixed = apply_bellman(model, prefs, space, step.Phi);
      report.Phi = std::move(step.Phi);
      report.policy = std::move(at_fixed.greedy);
      report.iterations = it;
      report.final_residual = res;
      return report;
    }
    if (it == options.max_iter)
      throw iteration_limit_error(
          "value iteration did not reach tolerance " + std::to_string(options.tol) + " in " +
              std::to_string(options.max_iter) + " iterations",
          step.Phi, Phi, residual_tail);
    Phi = std::move(step.Phi);
  }
  throw iteration_limit_error("value iteration: max_iter must be >= 1", Phi, Phi, {});
}

std::vector<double> policy_value(const MarketModel& model, const Preferences& prefs,
                                 const Policy& policy, double tol) {
  const FramingSpec framing = framing_from_policy(model, prefs, policy);
  IterateOptions opts;
  opts.tol = tol;
  const IterationReport rep =
      iterate_recursion(default_start(framing, prefs), framing, model, prefs, opts);
  std::vector<double> F(model.n_states());
  for (int x = 0; x < model.n_states(); ++x) F[x] = policy.c[x] * rep.fixed_point.values[x];
  return F;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

const char* to_string(VerificationStatus status) {
  switch (status) {
    case VerificationStatus::certified: return "certified";
    case VerificationStatus::uncertified: return "uncertified";
    case VerificationStatus::failed: return "failed";
  }
  return "unknown";
}

VerificationReport verify_feasibility(const MarketModel& model, const Preferences& prefs,
                                      const PolicySpace& space, const VerifyOptions& options) {
  const int n = model.n_states();
  const int na = model.n_assets;
  space.validate(n, na);
  VerificationReport report;
  if (na > options.vertex_asset_cap)
    report.warnings.push_back("allocation box exceeds " +
                              std::to_string(options.vertex_asset_cap) +
                              " assets; corner checks use a deterministic sample");

  // (a) strictly positive portfolio returns over the whole box: the return
  // is linear in theta, so the per-atom minimum sits at a corner found by
  // sign inspection.
  {
    double worst = kInf;
    std::vector<double> d(na);
    for (int x = 0; x < n; ++x) {
      const double rf = model.risk_free[x];
      const auto lo = state_lo(space, x, na), hi = state_hi(space, x, na);
      for (int y = 0; y < n; ++y)
        for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s) {
          for (int i = 0; i < na; ++i) d[i] = model.asset_r(i, s) - rf;
          worst = std::min(worst, rf + corner_min_linear(d, lo, hi));
        }
    }
    report.positive_returns.applicable = true;
    report.positive_returns.attained = worst;
    report.positive_returns.threshold = 0.0;
    report.positive_returns.pass = worst > 0.0;
    report.positive_returns.detail = "min over box corners and atoms of the gross portfolio return";
  }

  // per-state certainty equivalent of the portfolio return
  const auto ce_return = [&](int x, std::span<const double> theta) {
    const ContinuationEvaluator eval(model, prefs, x, {}, /*with_gain_loss=*/false);
    return eval(theta);
  };

  // The remaining checks integrate portfolio returns over the whole box, so
  // they are only evaluable once every corner stays positive.
  if (!report.positive_returns.pass) {
    report.growth.applicable = true;
    report.growth.detail = "not evaluated: some portfolio in the box has a nonpositive return";
    report.varpi_nonnegative = nonnegative_gain_loss_certified(model, prefs, space);
    report.status = VerificationStatus::failed;
    return report;
  }

  // (b) growth condition branches
  {
    report.growth.applicable = true;
    if (prefs.unit_rho()) {
      report.growth.pass = true;
      report.growth.attained = prefs.beta;
      report.growth.threshold = 1.0;
      report.growth.detail = "rho == 1: the product is beta and always passes";
    } else {
      report.growth.threshold = std::pow(prefs.beta, -1.0 / (1.0 - prefs.rho));
      if (prefs.rho < 1.0) {
        double worst = -kInf;
        for (int x = 0; x < n; ++x) {
          auto [theta, ce] = maximize_over_box(
              [&](const std::vector<double>& t) { return ce_return(x, t); },
              state_lo(space, x, na), state_hi(space, x, na));
          worst = std::max(worst, (1.0 - space.c_lo[x]) * ce);
        }
        report.growth.attained = worst;
        report.growth.pass = worst < report.growth.threshold;
        report.growth.detail =
            "rho < 1: max over states and policies of (1-c) CE(portfolio return)";
      } else {
        double worst = kInf;
        for (int x = 0; x < n; ++x) {
          double ce_min = kInf;
          for_each_vertex(state_lo(space, x, na), state_hi(space, x, na),
                          options.vertex_asset_cap, [&](const std::vector<double>& v) {
                            ce_min = std::min(ce_min, ce_return(x, v));
                          });
          if (na == 0) ce_min = ce_return(x, {});
          worst = std::min(worst, (1.0 - space.c_hi[x]) * ce_min);
        }
        report.growth.attained = worst;
        report.growth.pass = worst > report.growth.threshold;
        report.growth.detail =
            "rho > 1: min over states and policies of (1-c) CE(portfolio return)";
      }
    }
  }

  report.varpi_nonnegative = nonnegative_gain_loss_certified(model, prefs, space);

  // gain-loss coefficients per state
  std::vector<std::vector<double>> bg(n, std::vector<double>(na));
  for (int x = 0; x < n; ++x)
    for (int i = 0; i < na; ++i)
      bg[x][i] = prefs.framing_weights_b[i] * gain_loss_per_unit(model, prefs, x, i);

  // Whether a vertex at state x extends to a policy whose gain-loss term is
  // negative somewhere (the quantifier set of the negative-framing checks).
  const auto negative_elsewhere = [&](int x) {
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      if (corner_min_linear(bg[y], state_lo(space, y, na), state_hi(space, y, na)) < 0.0)
        return true;
    }
    return false;
  };

  const double i_lo = n > 0 ? *std::min_element(space.c_lo.begin(), space.c_lo.end()) : 0.0;
  const double i_hi = n > 0 ? *std::max_element(space.c_hi.begin(), space.c_hi.end()) : 1.0;

  // (c) negative-framing sufficient bound (rho < 1):
  //     H(i_lo, 0) CE_x(R_theta) > (sum_i b_i theta_i g_i(x))^-   at corners.
  {
    CheckOutcome& c23 = report.negative_framing_sufficient;
    c23.applicable = !report.varpi_nonnegative && prefs.rho < 1.0 && !prefs.unit_rho();
    if (c23.applicable) {
      const double floor = aggregate(i_lo, 0.0, prefs);
      double worst = kInf;
      for (int x = 0; x < n; ++x) {
        const bool any_vertex = negative_elsewhere(x);
        for_each_vertex(state_lo(space, x, na), state_hi(space, x, na), options.vertex_asset_cap,
                        [&](const std::vector<double>& v) {
                          double lin = 0.0;
                          for (int i = 0; i < na; ++i) lin += bg[x][i] * v[i];
                          if (!any_vertex && !(lin < 0.0)) return;  // vertex not in the quantifier set
                          const double margin = floor * ce_return(x, v) - std::max(-lin, 0.0);
                          worst = std::min(worst, margin);
                        });
      }
      c23.attained = worst;
      c23.threshold = 0.0;
      c23.pass = worst < kInf && worst > 0.0;
      c23.detail = "H(min consumption, 0) CE(portfolio return) minus the negative part of the "
                   "gain-loss term, minimized over box corners";
      if (worst == kInf) {
        // no corner lies in the quantifier set; nothing to certify
        c23.applicable = false;
        c23.pass = false;
      }
    }
  }

  // (d) negative-framing general bound (conservative corner evaluation of the
  //     exact condition), on request.
  if (options.evaluate_general_condition) {
    CheckOutcome& c22 = report.negative_framing_general;
    c22.applicable = !report.varpi_nonnegative;
    if (c22.applicable) {
      // adversarial continuation factor per next state
      std::vector<double> h_min(n);
      for (int y = 0; y < n; ++y) {
        const double lin_min =
            corner_min_linear(bg[y], state_lo(space, y, na), state_hi(space, y, na));
        const double pos = std::max(lin_min, 0.0);
        h_min[y] = std::min(aggregate(i_lo, (1.0 - i_lo) * pos, prefs),
                            aggregate(i_hi, (1.0 - i_hi) * pos, prefs));
      }
      double worst = kInf;
      std::vector<double> logs, w;
      for (int x = 0; x < n; ++x) {
        const bool any_vertex = negative_elsewhere(x);
        double lhs_min = kInf, rhs_max = -kInf;
        for_each_vertex(
            state_lo(space, x, na), state_hi(space, x, na), options.vertex_asset_cap,
            [&](const std::vector<double>& v) {
              double lin = 0.0;
              for (int i = 0; i < na; ++i) lin += bg[x][i] * v[i];
              if (!any_vertex && !(lin < 0.0)) return;
              logs.clear();
              w.clear();
              const double rf = model.risk_free[x];
              for (int y = 0; y < n; ++y) {
                const double pxy = model.chain.p(x, y);
                const double lh = h_min[y] > 0.0 ? std::log(h_min[y]) : -kInf;
                for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s) {
                  double r = rf;
                  for (int i = 0; i < na; ++i) r += v[i] * (model.asset_r(i, s) - rf);
                  logs.push_back((r > 0.0 ? std::log(r) : -kInf) + lh);
                  w.push_back(pxy * model.atom_prob[s]);
                }
              }
              lhs_min = std::min(
                  lhs_min, detail::ce_log_space(logs, w, prefs.gamma, prefs.unit_gamma()));
              rhs_max = std::max(rhs_max, std::max(-lin, 0.0));
            });
        if (lhs_min < kInf) worst = std::min(worst, lhs_min - rhs_max);
      }
      c22.attained = worst;
      c22.threshold = 0.0;
      c22.pass = worst < kInf && worst > 0.0;
      c22.detail = "certainty equivalent of the return times the worst continuation floor, minus "
                   "the negative gain-loss part; corners evaluated adversarially";
      if (worst == kInf) {
        c22.applicable = false;
        c22.pass = false;
      }
    }
  }

  // (e) start condition for the seeded iteration
  {
    CheckOutcome& sc = report.start_condition;
    sc.applicable = !report.varpi_nonnegative;
    const bool via_rho = prefs.rho >= 1.0 || prefs.unit_rho();
    bool via_interior = na > 0;
    for (int x = 0; x < n && via_interior; ++x)
      for (int i = 0; i < na && via_interior; ++i)
        if (!(space.t_lo(x, i, na) > 0.0 && space.t_hi(x, i, na) < 1.0)) via_interior = false;
    bool via_gain_state = false;
    for (int x = 0; x < n && !via_gain_state; ++x)
      if (corner_max_linear(bg[x], state_lo(space, x, na), state_hi(space, x, na)) >= 0.0)
        via_gain_state = true;
    sc.pass = via_rho || via_interior || via_gain_state;
    sc.detail = via_rho          ? "rho >= 1"
                : via_interior   ? "allocations confined to (0, a] with a < 1"
                : via_gain_state ? "some state offers nonnegative gain-loss utility"
                                 : "no branch holds";
  }

  if (!report.positive_returns.pass || !report.growth.pass) {
    report.status = VerificationStatus::failed;
  } else if (report.varpi_nonnegative) {
    report.status = VerificationStatus::certified;
  } else {
    const bool negative_ok =
        report.negative_framing_sufficient.pass || report.negative_framing_general.pass;
    report.status = negative_ok && report.start_condition.pass ? VerificationStatus::certified
                                                               : VerificationStatus::uncertified;
  }
  return report;
}

}  // namespace regal
