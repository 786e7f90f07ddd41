#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "regal/errors.hpp"
#include "regal/preferences.hpp"

namespace regal {

/// Finite irreducible Markov chain.
struct MarkovChain {
  int n_states = 0;
  std::vector<double> transition;  // row-major, n_states x n_states

  double p(int x, int y) const { return transition[static_cast<std::size_t>(x) * n_states + y]; }

  /// Rows must sum to 1 within 1e-12 (entries nonnegative) and the chain
  /// must be irreducible; otherwise validation_error / model_error.
  /// Irreducibility is checked structurally: breadth-first search over the
  /// nonzero-entry graph from every state.
  void validate() const;
  bool irreducible() const;
};

/// Unique stationary distribution pi of an irreducible chain, solved as a
/// dense linear system with the normalization row replacing one balance
/// equation.
std::vector<double> stationary_distribution(const MarkovChain& chain);

/// Finite-state market environment: chain, per-transition discrete noise
/// atoms, and gross asset returns.  Noise is stored per ordered transition
/// even when i.i.d. (a shared atom list is broadcast at construction).
///
/// Atom storage is flattened: slots [atom_begin[x*n+y], atom_begin[x*n+y+1])
/// hold the atoms of transition (x, y).  Asset returns live in a parallel
/// array indexed [asset * total_atoms + slot].
struct MarketModel {
  MarkovChain chain;
  std::vector<std::int32_t> atom_begin;  // n*n + 1 offsets
  std::vector<double> atom_value;
  std::vector<double> atom_prob;
  std::vector<double> risk_free;  // r0 per state
  int n_assets = 0;
  std::vector<double> asset_return;

  int n_states() const { return chain.n_states; }
  int total_atoms() const { return static_cast<int>(atom_value.size()); }
  int slot_begin(int x, int y) const { return atom_begin[static_cast<std::size_t>(x) * n_states() + y]; }
  int slot_end(int x, int y) const { return atom_begin[static_cast<std::size_t>(x) * n_states() + y + 1]; }
  double asset_r(int asset, int slot) const {
    return asset_return[static_cast<std::size_t>(asset) * total_atoms() + slot];
  }

  /// Structural validation: chain, per-transition atom probabilities
  /// summing to 1 within 1e-12, strictly positive risk-free and risky
  /// gross returns.
  void validate() const;
};

/// Shared i.i.d. atoms broadcast to every transition.
MarketModel make_model_shared_atoms(MarkovChain chain, std::span<const Atom> atoms,
                                    std::vector<double> risk_free);

/// Per-transition atoms; `atoms[x][y]` lists the atoms of transition (x, y).
MarketModel make_model_per_transition(MarkovChain chain,
                                      const std::vector<std::vector<std::vector<Atom>>>& atoms,
                                      std::vector<double> risk_free);

/// Appends an asset with explicit return table r(x, y, j), laid out to match
/// the model's atom slots.
void add_asset_table(MarketModel& model, std::span<const double> returns);

/// Appends an asset whose return is built from price-dividend ratios:
/// r(x, y, j) = atom_value(j) * (phi(y) + 1) / phi(x).
void add_asset_price_dividend(MarketModel& model, std::span<const double> phi);

/// E[f(x, X', Y') | X = x] with deterministic summation order: ascending
/// next state, then ascending atom index.  `f` receives (x, x', atom value).
double conditional_expectation(const MarketModel& model, int x,
                               const std::function<double(int, int, double)>& f);

/// Per-unit gain-loss utility of asset i conditional on state x:
///
///   g_i(x) = E[(R_i - R_f) 1{R_i > R_f} + k (R_i - R_f) 1{R_i < R_f} | x].
///
/// Exact ties R_i = R_f contribute zero (both indicators exclude equality).
double gain_loss_per_unit(const MarketModel& model, const Preferences& prefs, int x, int asset);

/// Gross portfolio return r0(x) + sum_i theta_i (r_i(x,y,j) - r0(x)).
/// Throws infeasible_return_error when the result is not strictly positive.
double portfolio_return(const MarketModel& model, int x, int y, int slot,
                        std::span<const double> theta);

/// Mean and standard deviation of the one-period return of `asset` under
/// the unconditional stationary law of (X, X', Y').
struct ReturnMoments {
  double mean = 0.0;
  double stdev = 0.0;
};
ReturnMoments stationary_return_moments(const MarketModel& model, int asset);

}  // namespace regal
