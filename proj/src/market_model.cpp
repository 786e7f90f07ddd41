#include "regal/market_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

namespace regal {

namespace {
constexpr double kProbTol = 1e-12;
}

void MarkovChain::validate() const {
  if (n_states <= 0) throw validation_error("chain.n_states: must be positive");
  if (transition.size() != static_cast<std::size_t>(n_states) * n_states)
    throw validation_error("chain.transition: wrong shape, expected n_states x n_states");
  for (int x = 0; x < n_states; ++x) {
    double row = 0.0;
    for (int y = 0; y < n_states; ++y) {
      const double v = p(x, y);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw validation_error("transition[" + std::to_string(x) + "][" + std::to_string(y) +
                               "]: must be a nonnegative number");
      row += v;
    }
    if (std::abs(row - 1.0) > kProbTol)
      throw validation_error("transition[" + std::to_string(x) + "]: row sums to " +
                             std::to_string(row) + ", not 1 within 1e-12");
  }
  if (!irreducible()) throw model_error("chain: not irreducible (reachability closure incomplete)");
}

bool MarkovChain::irreducible() const {
  // strongly connected <=> every state reaches every other over nonzero entries
  for (int s = 0; s < n_states; ++s) {
    std::vector<char> seen(n_states, 0);
    std::deque<int> queue{s};
    seen[s] = 1;
    int found = 1;
    while (!queue.empty()) {
      const int x = queue.front();
      queue.pop_front();
      for (int y = 0; y < n_states; ++y) {
        if (!seen[y] && p(x, y) > 0.0) {
          seen[y] = 1;
          ++found;
          queue.push_back(y);
        }
      }
    }
    if (found != n_states) return false;
  }
  return true;
}

std::vector<double> stationary_distribution(const MarkovChain& chain) {
  chain.validate();
  const int n = chain.n_states;
  if (n == 1) return {1.0};
  // (I - P^T) pi = 0 with the last balance equation replaced by sum(pi) = 1.
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = (i == j ? 1.0 : 0.0) - chain.p(j, i);
  for (int j = 0; j < n; ++j) A(n - 1, j) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd pi = A.partialPivLu().solve(rhs);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    if (!(pi(i) > 0.0))
      throw model_error("stationary distribution has a nonpositive entry at state " +
                        std::to_string(i));
    out[i] = pi(i);
  }
  return out;
}

void MarketModel::validate() const {
  chain.validate();
  const int n = n_states();
  if (atom_begin.size() != static_cast<std::size_t>(n) * n + 1)
    throw validation_error("noise: wrong number of transitions");
  if (atom_prob.size() != atom_value.size())
    throw validation_error("noise: value/probability arrays disagree");
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const int b = slot_begin(x, y), e = slot_end(x, y);
      if (e <= b)
        throw validation_error("noise[" + std::to_string(x) + "][" + std::to_string(y) +
                               "]: transition has no atoms");
      double psum = 0.0;
      for (int s = b; s < e; ++s) {
        if (!(atom_prob[s] >= 0.0))
          throw validation_error("noise[" + std::to_string(x) + "][" + std::to_string(y) +
                                 "]: negative probability");
        psum += atom_prob[s];
      }
      if (std::abs(psum - 1.0) > kProbTol)
        throw validation_error("noise[" + std::to_string(x) + "][" + std::to_string(y) +
                               "]: atom probabilities sum to " + std::to_string(psum) +
                               ", not 1 within 1e-12");
    }
  }
  if (risk_free.size() != static_cast<std::size_t>(n))
    throw validation_error("returns.risk_free: expected one entry per state");
  for (int x = 0; x < n; ++x)
    if (!(risk_free[x] > 0.0))
      throw validation_error("returns.risk_free[" + std::to_string(x) +
                             "]: must be strictly positive");
  if (asset_return.size() != static_cast<std::size_t>(n_assets) * total_atoms())
    throw validation_error("returns.assets: wrong table shape");
  for (int i = 0; i < n_assets; ++i)
    for (int s = 0; s < total_atoms(); ++s)
      if (!(asset_r(i, s) > 0.0))
        throw validation_error("returns.assets[" + std::to_string(i) +
                               "]: gross return must be strictly positive on every atom");
}

namespace {

MarketModel assemble(MarkovChain chain, std::vector<std::int32_t> begin,
                     std::vector<double> values, std::vector<double> probs,
                     std::vector<double> risk_free) {
  MarketModel m;
  m.chain = std::move(chain);
  m.atom_begin = std::move(begin);
  m.atom_value = std::move(values);
  m.atom_prob = std::move(probs);
  m.risk_free = std::move(risk_free);
  return m;
}

}  // namespace

MarketModel make_model_shared_atoms(MarkovChain chain, std::span<const Atom> atoms,
                                    std::vector<double> risk_free) {
  const int n = chain.n_states;
  const int m = static_cast<int>(atoms.size());
  std::vector<std::int32_t> begin(static_cast<std::size_t>(n) * n + 1);
  std::vector<double> values(static_cast<std::size_t>(n) * n * m);
  std::vector<double> probs(values.size());
  for (int t = 0; t < n * n; ++t) {
    begin[t] = t * m;
    for (int j = 0; j < m; ++j) {
      values[static_cast<std::size_t>(t) * m + j] = atoms[j].value;
      probs[static_cast<std::size_t>(t) * m + j] = atoms[j].prob;
    }
  }
  begin[static_cast<std::size_t>(n) * n] = n * n * m;
  return assemble(std::move(chain), std::move(begin), std::move(values), std::move(probs),
                  std::move(risk_free));
}

MarketModel make_model_per_transition(MarkovChain chain,
                                      const std::vector<std::vector<std::vector<Atom>>>& atoms,
                                      std::vector<double> risk_free) {
  const int n = chain.n_states;
  if (atoms.size() != static_cast<std::size_t>(n))
    throw validation_error("noise.per_transition: expected one row per state");
  std::vector<std::int32_t> begin;
  begin.reserve(static_cast<std::size_t>(n) * n + 1);
  std::vector<double> values, probs;
  std::int32_t off = 0;
  for (int x = 0; x < n; ++x) {
    if (atoms[x].size() != static_cast<std::size_t>(n))
      throw validation_error("noise.per_transition[" + std::to_string(x) +
                             "]: expected one atom list per next state");
    for (int y = 0; y < n; ++y) {
      begin.push_back(off);
      for (const Atom& a : atoms[x][y]) {
        values.push_back(a.value);
        probs.push_back(a.prob);
        ++off;
      }
    }
  }
  begin.push_back(off);
  return assemble(std::move(chain), std::move(begin), std::move(values), std::move(probs),
                  std::move(risk_free));
}

void add_asset_table(MarketModel& model, std::span<const double> returns) {
  if (returns.size() != static_cast<std::size_t>(model.total_atoms()))
    throw validation_error("returns.assets[" + std::to_string(model.n_assets) +
                           "].table: expected one return per (state, next state, atom)");
  model.asset_return.insert(model.asset_return.end(), returns.begin(), returns.end());
  ++model.n_assets;
}

void add_asset_price_dividend(MarketModel& model, std::span<const double> phi) {
  const int n = model.n_states();
  if (phi.size() != static_cast<std::size_t>(n))
    throw validation_error("returns.assets[" + std::to_string(model.n_assets) +
                           "].price_dividend.phi: expected one ratio per state");
  for (int x = 0; x < n; ++x)
    if (!(phi[x] > 0.0))
      throw validation_error("returns.assets[" + std::to_string(model.n_assets) +
                             "].price_dividend.phi[" + std::to_string(x) +
                             "]: must be strictly positive");
  std::vector<double> table(model.total_atoms());
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s)
        table[s] = model.atom_value[s] * (phi[y] + 1.0) / phi[x];
  add_asset_table(model, table);
}

double conditional_expectation(const MarketModel& model, int x,
                               const std::function<double(int, int, double)>& f) {
  if (x < 0 || x >= model.n_states())
    throw validation_error("conditional_expectation: invalid state index");
  double total = 0.0;
  for (int y = 0; y < model.n_states(); ++y) {
    const double pxy = model.chain.p(x, y);
    double inner = 0.0;
    for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s)
      inner += model.atom_prob[s] * f(x, y, model.atom_value[s]);
    total += pxy * inner;
  }
  return total;
}

double gain_loss_per_unit(const MarketModel& model, const Preferences& prefs, int x, int asset) {
  const double rf = model.risk_free[x];
  const double k = prefs.loss_aversion_k;
  double total = 0.0;
  for (int y = 0; y < model.n_states(); ++y) {
    const double pxy = model.chain.p(x, y);
    double inner = 0.0;
    for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s) {
      const double d = model.asset_r(asset, s) - rf;
      if (d > 0.0)
        inner += model.atom_prob[s] * d;
      else if (d < 0.0)
        inner += model.atom_prob[s] * k * d;
    }
    total += pxy * inner;
  }
  return total;
}

double portfolio_return(const MarketModel& model, int x, int y, int slot,
                        std::span<const double> theta) {
  const double rf = model.risk_free[x];
  double r = rf;
  for (int i = 0; i < model.n_assets; ++i) r += theta[i] * (model.asset_r(i, slot) - rf);
  if (!(r > 0.0))
    throw infeasible_return_error("portfolio return nonpositive at transition (" +
                                  std::to_string(x) + ", " + std::to_string(y) + "), atom slot " +
                                  std::to_string(slot));
  return r;
}

ReturnMoments stationary_return_moments(const MarketModel& model, int asset) {
  const std::vector<double> pi = stationary_distribution(model.chain);
  double m1 = 0.0, m2 = 0.0;
  for (int x = 0; x < model.n_states(); ++x)
    for (int y = 0; y < model.n_states(); ++y) {
      const double w = pi[x] * model.chain.p(x, y);
      for (int s = model.slot_begin(x, y); s < model.slot_end(x, y); ++s) {
        const double r = model.asset_r(asset, s);
        m1 += w * model.atom_prob[s] * r;
        m2 += w * model.atom_prob[s] * r * r;
      }
    }
  ReturnMoments out;
  out.mean = m1;
  out.stdev = std::sqrt(std::max(m2 - m1 * m1, 0.0));
  return out;
}

}  // namespace regal
