#pragma once

#include "regal/model_io.hpp"

namespace regal {

/// The built-in two-state market: a stock whose return comes from i.i.d.
/// dividend growth atoms through regime-dependent price-dividend ratios,
/// plus a risk-free asset.  Calibrated so that the stationary stock return
/// has mean 6% and standard deviation 15%.  Used by the
/// reproduce-paper-example workflow and as a regression fixture.
ModelFile example_two_state_market();

/// Published reference values for the example's solution and diagnostics.
struct ExampleReference {
  double g[2] = {0.1532, -0.0551};
  double g_tol = 1e-4;
  double mean = 1.06, mean_tol = 0.005;
  double stdev = 0.15, stdev_tol = 0.005;
  double premium = 0.03, premium_tol = 0.005;
  double c[2] = {0.0585, 0.0730};
  double c_tol = 5e-4;
  double theta[2] = {1.0, 0.150};
  double theta_tol = 5e-3;
  double phi[2] = {0.0679, 0.0544};
  double phi_tol = 5e-4;
};

}  // namespace regal
