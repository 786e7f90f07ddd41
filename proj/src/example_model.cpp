#include "regal/example_model.hpp"

namespace regal {

ModelFile example_two_state_market() {
  ModelFile file;
  file.state_names = {"low_valuation", "high_valuation"};
  file.asset_names = {"stock"};

  MarkovChain chain;
  chain.n_states = 2;
  chain.transition = {0.6, 0.4, 0.2, 0.8};

  // annual dividend growth atoms
  const Atom atoms[] = {
      {0.976, 0.03}, {0.993, 0.03}, {1.002, 0.10}, {1.011, 0.16}, {1.019, 0.24},
      {1.028, 0.19}, {1.037, 0.13}, {1.045, 0.09}, {1.054, 0.03},
  };
  file.model = make_model_shared_atoms(std::move(chain), atoms, {1.03, 1.03});
  const double phi[] = {30.25, 39.75};
  add_asset_price_dividend(file.model, phi);
  file.model.validate();

  file.preferences.beta = 0.937;
  file.preferences.rho = 0.5;
  file.preferences.gamma = 8.0;
  file.preferences.loss_aversion_k = 1.5;
  file.preferences.framing_weights_b = {0.00065};
  file.preferences.validate();

  PolicySpace space;
  space.c_lo = {0.0045, 0.0045};
  space.c_hi = {1.0, 1.0};
  space.theta_lo = {0.0, 0.0};
  space.theta_hi = {1.0, 1.0};
  file.policy_space = std::move(space);
  return file;
}

}  // namespace regal
