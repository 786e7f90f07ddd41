#pragma once

#include <string>

#include "json.hpp"

#include "regal/example_model.hpp"
#include "regal/model_io.hpp"
#include "regal/portfolio_dp.hpp"
#include "regal/utility_fixed_point.hpp"

namespace regal::workflows {

using Json = nlohmann::ordered_json;

/// Shared solver configuration for the solve workflows.
struct SolveConfig {
  double tol = 1e-12;
  long max_iter = 1'000'000;
  std::string start;       // "", "ones", "f0", "phi0", or comma-separated numbers
  bool force = false;      // skip the verification gate
  std::string trace_path;  // write iteration,residual CSV when nonempty
};

/// Result of a workflow: the machine-readable document (one JSON object),
/// a short human summary, and the process exit code (0 success,
/// 1 validation failure, 2 verification-gate refusal, 3 solver failure).
struct Outcome {
  Json document;
  std::string summary;
  int exit_code = 0;
};

Json verification_json(const VerificationReport& report);
Json growth_json(const GrowthCheck& growth);
Json negative_framing_json(const NegativeFramingCheck& check);
Json census_json(const SingletonCensus& census);

/// Structural diagnostics: row stochasticity, irreducibility, atom
/// probabilities, positive returns.  Expects a shape-checked (unvalidated)
/// model file.
Outcome validate_model(const ModelFile& file);

/// Fixed-point solve of the utility recursion for a fixed policy or a raw
/// framing.  Gate: the growth condition must pass unless forced.
Outcome solve_utility(const ModelFile& file, const PolicyOrFraming& input,
                      const SolveConfig& config);

/// Verification followed by value iteration and policy extraction.  Gate:
/// refuses on failed verification unless forced; proceeds with a warning
/// when the sufficient conditions leave the model uncertified.
Outcome solve_portfolio(const ModelFile& file, const SolveConfig& config);

/// Verification only.
Outcome verify(const ModelFile& file, bool evaluate_general_condition);

/// Rebuilds the built-in two-state market from embedded constants, prints
/// gain-loss, calibration and verification diagnostics, solves the
/// dynamic program and compares everything against the published values.
Outcome reproduce_example(const SolveConfig& config);

/// Fixed-point census of the single-state recursion.
Outcome analyze_singleton_workflow(double beta, double rho, double gamma, double delta,
                                   double varpi);

}  // namespace regal::workflows
