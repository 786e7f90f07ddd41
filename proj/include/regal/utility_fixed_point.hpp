#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regal/market_model.hpp"
#include "regal/policy.hpp"
#include "regal/preferences.hpp"

namespace regal {

/// Utility per unit of current consumption, one value per state.
struct UtilityFunction {
  std::vector<double> values;

  bool strictly_positive() const;
};

/// Log consumption-growth kernel kappa(x, x', atom) stored per atom slot of
/// the market model it was built against, plus the per-state gain-loss term
/// varpi(x) (utility of gains and losses per unit of current consumption).
struct FramingSpec {
  std::vector<double> kappa;  // aligned with MarketModel atom slots
  std::vector<double> varpi;  // per state

  bool has_negative_varpi() const;
};

/// Builds a framing from a callable kappa(x, x', atom index).
FramingSpec make_framing(const MarketModel& model,
                         const std::function<double(int, int, int)>& kappa,
                         std::vector<double> varpi);

/// Constant kappa across all transitions and atoms.
FramingSpec framing_constant(const MarketModel& model, double kappa_value,
                             std::vector<double> varpi);

/// Framing induced by a stationary policy:
///   kappa(x,x',y) = ln c(x') - ln c(x) + ln(1 - c(x)) + ln R_theta(x,x',y)
///   varpi(x)      = ((1 - c(x)) / c(x)) * sum_i b_i theta_i(x) g_i(x)
FramingSpec framing_from_policy(const MarketModel& model, const Preferences& prefs,
                                const Policy& policy);

/// One step of the utility recursion:
///
///   (Tf)(x) = H(1, CE_x(e^kappa f(X')) + varpi(x)).
///
/// When CE + varpi < 0 at some state the map is undefined there and a
/// domain_error listing the offending states is thrown.  A zero value of f
/// at a reachable state propagates through the gamma >= 1 zero-atom
/// convention of the certainty equivalent.
UtilityFunction apply_recursion(const UtilityFunction& f, const FramingSpec& framing,
                                const MarketModel& model, const Preferences& prefs);

/// Growth condition: delta from the spectral problem for this framing's
/// kappa, and the product beta * delta^(1-rho).  The iteration below
/// contracts when the product is < 1.  For rho == 1 the product is beta and
/// the condition always holds.
struct GrowthCheck {
  double delta = 0.0;
  double product = 0.0;
  bool pass = false;
};
GrowthCheck growth_condition(const FramingSpec& framing, const MarketModel& model,
                             const Preferences& prefs);

/// Start-condition check used when varpi takes negative values.  Builds the
/// floor f0(x) = H(1, varpi^+(x)), requires the recursion to be defined at
/// f0, and searches for m <= m_max with T^m f0 > f0 strictly at every state
/// (margin 1e-12).  When gamma < 1 or f0 is strictly positive, a single
/// state with T f0(x) > f0(x) already settles the question, so that
/// shortcut is applied if the explicit search runs out.
struct NegativeFramingCheck {
  enum class Status { pass, fail, not_applicable };
  Status status = Status::not_applicable;
  int m = -1;               // iterations found, -1 when settled by shortcut
  std::string reason;       // "domain" / "no-strict-improvement" on failure
};
NegativeFramingCheck check_negative_framing(const FramingSpec& framing, const MarketModel& model,
                                            const Preferences& prefs, int m_max = 1000);

/// The floor function f0(x) = H(1, varpi^+(x)).
UtilityFunction gain_loss_floor(const FramingSpec& framing, const Preferences& prefs);

struct IterateOptions {
  double tol = 1e-12;          // sup-norm residual target
  long max_iter = 1'000'000;
  std::vector<double>* trace = nullptr;  // residual per iteration, when set
};

struct IterationReport {
  UtilityFunction fixed_point;
  long iterations = 0;
  double final_residual = 0.0;
  GrowthCheck growth;
  std::optional<NegativeFramingCheck> negative_framing;  // present when varpi < 0 somewhere
};

/// Repeats apply_recursion from `start` until the sup-norm residual drops
/// to `tol`.  The fixed point is independent of the start; the invariant
/// suite checks that, not this routine.  Non-convergence raises
/// iteration_limit_error carrying the last two iterates and the residual
/// trajectory tail.
IterationReport iterate_recursion(const UtilityFunction& start, const FramingSpec& framing,
                                  const MarketModel& model, const Preferences& prefs,
                                  const IterateOptions& options = {});

/// Default start for solve workflows: constant 1 when varpi >= 0, the floor
/// f0 otherwise.
UtilityFunction default_start(const FramingSpec& framing, const Preferences& prefs);

/// Fixed-point census of the single-state recursion T(f) = H(1, delta f +
/// varpi) on its domain [max(-varpi/delta, 0), infinity).  T is strictly
/// increasing and concave there, so it has 0, 1 or 2 fixed points; they are
/// located by sign-change bisection to 1e-12 on brackets split at the
/// concave maximum of T(f) - f.  Roots at the domain boundary itself are
/// not counted.
struct SingletonCensus {
  double domain_lower = 0.0;
  int count = 0;
  std::vector<double> roots;
  bool tangency = false;  // the knife-edge case where the identity line touches T
};
SingletonCensus analyze_singleton(double delta, double varpi, const Preferences& prefs);

}  // namespace regal
