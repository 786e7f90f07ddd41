#include "regal/policy.hpp"

#include <cmath>
#include <string>

namespace regal {

void PolicySpace::validate(int n_states, int n_assets) const {
  const auto ns = static_cast<std::size_t>(n_states);
  const auto na = static_cast<std::size_t>(n_assets);
  if (c_lo.size() != ns || c_hi.size() != ns)
    throw validation_error("policy_space.consumption: expected one interval per state");
  if (theta_lo.size() != ns * na || theta_hi.size() != ns * na)
    throw validation_error("policy_space.allocation: expected one box per state and asset");
  for (int x = 0; x < n_states; ++x) {
    if (!(c_lo[x] >= 0.0 && c_lo[x] <= c_hi[x] && c_hi[x] <= 1.0))
      throw validation_error("policy_space.consumption[" + std::to_string(x) +
                             "]: need 0 <= lo <= hi <= 1");
    if (!(c_lo[x] < 1.0))
      throw validation_error("policy_space.consumption[" + std::to_string(x) +
                             "]: lower bound must be < 1");
    for (int i = 0; i < n_assets; ++i) {
      const double lo = t_lo(x, i, n_assets), hi = t_hi(x, i, n_assets);
      if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi))
        throw validation_error("policy_space.allocation[" + std::to_string(x) + "][" +
                               std::to_string(i) + "]: need finite lo <= hi");
    }
  }
}

void Policy::validate(int n_states, int n_assets) const {
  if (c.size() != static_cast<std::size_t>(n_states))
    throw validation_error("policy.c: expected one propensity per state");
  if (theta.size() != static_cast<std::size_t>(n_states) * n_assets)
    throw validation_error("policy.theta: expected one allocation per state and asset");
  for (int x = 0; x < n_states; ++x) {
    if (!(c[x] > 0.0 && c[x] < 1.0))
      throw validation_error("policy.c[" + std::to_string(x) + "]: must lie in (0,1)");
    for (int i = 0; i < n_assets; ++i)
      if (!std::isfinite(t(x, i, n_assets)))
        throw validation_error("policy.theta[" + std::to_string(x) + "][" + std::to_string(i) +
                               "]: must be finite");
  }
}

bool Policy::feasible(const PolicySpace& space, int n_states, int n_assets) const {
  for (int x = 0; x < n_states; ++x) {
    if (c[x] < space.c_lo[x] || c[x] > space.c_hi[x]) return false;
    for (int i = 0; i < n_assets; ++i) {
      const double v = t(x, i, n_assets);
      if (v < space.t_lo(x, i, n_assets) || v > space.t_hi(x, i, n_assets)) return false;
    }
  }
  return true;
}

}  // namespace regal
