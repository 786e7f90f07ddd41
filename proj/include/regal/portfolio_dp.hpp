#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "regal/market_model.hpp"
#include "regal/policy.hpp"
#include "regal/preferences.hpp"

namespace regal {

/// Continuation value of one unit of post-consumption wealth at state x
/// under allocation theta:
///
///   D(x, theta) = sum_i theta_i b_i g_i(x) + CE_x(R_theta(x,X',Y') Phi(X')).
///
/// May be negative.  Throws infeasible_return_error when the portfolio
/// return is nonpositive on some atom.
double continuation_value(const MarketModel& model, const Preferences& prefs, int x,
                          std::span<const double> theta, std::span<const double> Phi);

/// Maximizer of the continuation value over the allocation box at state x.
/// D is strictly concave in theta, so a single ternary search settles one
/// asset and cyclic per-coordinate ternary search settles several (sweeps
/// stop when the value improves by < 1e-13).  Box bounds are returned
/// exactly when they win; value ties within 1e-13 break toward the
/// lexicographically smallest allocation.
std::pair<std::vector<double>, double> maximize_allocation(const MarketModel& model,
                                                           const Preferences& prefs,
                                                           const PolicySpace& space, int x,
                                                           std::span<const double> Phi);

/// Maximizer of H(c, (1-c) y) over the consumption interval, for y =
/// best continuation value >= 0.  For y > 0 the interior optimum
///
///   i_y = (1 + y^((1-rho)/rho) (beta/(1-beta))^(1/rho))^(-1)
///
/// (i_y = 1 - beta when rho == 1) is exact and gets clamped into [lo, hi].
/// For y == 0: with rho < 1 the map increases in c, so the upper endpoint
/// wins (an endpoint of exactly 1 stands for the supremum over [lo, 1), at
/// value H(1, 0)); with rho >= 1 every c gives 0 and the upper endpoint is
/// returned for determinism.
std::pair<double, double> maximize_consumption(const Preferences& prefs, double lo, double hi,
                                               double y);

/// One Bellman step: per state, maximize_allocation then
/// maximize_consumption.  Requires max_theta D >= 0 at every state;
/// otherwise domain_error listing the failing states.
struct BellmanResult {
  std::vector<double> Phi;
  Policy greedy;
};
BellmanResult apply_bellman(const MarketModel& model, const Preferences& prefs,
                            const PolicySpace& space, std::span<const double> Phi);

/// Seed value function
///
///   Phi0(x) = max_c H(c, (1-c) (max_theta sum_i theta_i b_i g_i(x))^+ ),
///
/// with the inner linear maximum taken at a box corner by sign inspection.
std::vector<double> seed_value_function(const MarketModel& model, const Preferences& prefs,
                                        const PolicySpace& space);

/// True when sum_i b_i theta_i g_i(x) >= 0 for every state and every theta
/// in the box (checked exactly at the minimizing corner), i.e. the
/// gain-loss term, and hence varpi, is nonnegative over the whole policy
/// space.
bool nonnegative_gain_loss_certified(const MarketModel& model, const Preferences& prefs,
                                     const PolicySpace& space);

struct BellmanOptions {
  double tol = 1e-12;
  long max_iter = 1'000'000;
  std::optional<std::vector<double>> start;  // default: ones if certified nonnegative, else seed
  std::vector<double>* trace = nullptr;
};

struct BellmanReport {
  std::vector<double> Phi;
  Policy policy;  // greedy at the fixed point; attains the max at every state
  long iterations = 0;
  double final_residual = 0.0;
  bool started_from_seed = false;
};

/// Value iteration to the unique fixed point of the Bellman map, with
/// greedy policy extraction at the fixed point.
BellmanReport solve_bellman(const MarketModel& model, const Preferences& prefs,
                            const PolicySpace& space, const BellmanOptions& options = {});

/// Value of a fixed stationary policy: F(x) = c(x) * f(x) where f is the
/// fixed point of the policy's utility recursion.
std::vector<double> policy_value(const MarketModel& model, const Preferences& prefs,
                                 const Policy& policy, double tol = 1e-12);

// ---------------------------------------------------------------------------
// Verification of the solvability conditions.
// ---------------------------------------------------------------------------

struct VerifyOptions {
  bool evaluate_general_condition = false;  // the exact-form negative-framing bound
  int vertex_asset_cap = 20;                // beyond this, corners are sampled with a warning
};

struct CheckOutcome {
  bool applicable = false;
  bool pass = false;
  double attained = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// certified: every sufficient condition needed by the convergence theory
///            holds.
/// uncertified: the hard checks hold but the negative-gain-loss sufficient
///            conditions could not certify the whole policy space (they are
///            one-sided; failure is not a disproof).
/// failed:    a hard check (positive returns, growth) fails.
enum class VerificationStatus { certified, uncertified, failed };

struct VerificationReport {
  CheckOutcome positive_returns;   // R_theta > 0 on every atom over the box
  CheckOutcome growth;             // rho-branch bound vs beta^(-1/(1-rho))
  bool varpi_nonnegative = false;  // gain-loss term nonnegative over the box
  CheckOutcome negative_framing_sufficient;  // the rho < 1 corner bound
  CheckOutcome negative_framing_general;     // exact form, when requested
  CheckOutcome start_condition;    // (i) rho >= 1 / (ii) allocations in (0,a] / (iii) some state gains
  VerificationStatus status = VerificationStatus::failed;
  std::vector<std::string> warnings;
};

const char* to_string(VerificationStatus status);

VerificationReport verify_feasibility(const MarketModel& model, const Preferences& prefs,
                                      const PolicySpace& space, const VerifyOptions& options = {});

}  // namespace regal
