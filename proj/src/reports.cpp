#include "regal/reports.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "regal/spectral.hpp"

namespace regal::workflows {

namespace {

Json check_json(const CheckOutcome& c) {
  Json j;
  j["applicable"] = c.applicable;
  if (c.applicable) {
    j["pass"] = c.pass;
    j["attained"] = c.attained;
    j["threshold"] = c.threshold;
  }
  j["detail"] = c.detail;
  return j;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw validation_error("--start: cannot parse '" + tok + "' as a number");
    }
  }
  if (out.empty()) throw validation_error("--start: empty vector");
  return out;
}

void write_trace(const std::string& path, const std::vector<double>& residuals) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw validation_error("--trace: cannot open " + path + " for writing");
  out << "iteration,residual\n";
  for (std::size_t i = 0; i < residuals.size(); ++i) out << (i + 1) << "," << residuals[i] << "\n";
}

Json error_json(const std::string& kind, const std::string& what) {
  Json j;
  j["error"] = kind;
  j["message"] = what;
  return j;
}

Json policy_json(const Policy& policy, int n_assets) {
  Json j;
  j["c"] = policy.c;
  Json theta = Json::array();
  for (std::size_t x = 0; x < policy.c.size(); ++x) {
    Json row = Json::array();
    for (int i = 0; i < n_assets; ++i) row.push_back(policy.t(static_cast<int>(x), i, n_assets));
    theta.push_back(row);
  }
  j["theta"] = theta;
  return j;
}

}  // namespace

Json growth_json(const GrowthCheck& growth) {
  Json j;
  j["delta"] = growth.delta;
  j["product"] = growth.product;
  j["pass"] = growth.pass;
  return j;
}

Json negative_framing_json(const NegativeFramingCheck& check) {
  Json j;
  switch (check.status) {
    case NegativeFramingCheck::Status::pass: j["status"] = "pass"; break;
    case NegativeFramingCheck::Status::fail: j["status"] = "fail"; break;
    case NegativeFramingCheck::Status::not_applicable: j["status"] = "not-applicable"; break;
  }
  if (check.m >= 0) j["m"] = check.m;
  if (!check.reason.empty()) j["reason"] = check.reason;
  return j;
}

Json verification_json(const VerificationReport& report) {
  Json j;
  j["status"] = to_string(report.status);
  j["positive_returns"] = check_json(report.positive_returns);
  j["growth"] = check_json(report.growth);
  j["gain_loss_nonnegative"] = report.varpi_nonnegative;
  j["negative_framing_sufficient"] = check_json(report.negative_framing_sufficient);
  j["negative_framing_general"] = check_json(report.negative_framing_general);
  j["start_condition"] = check_json(report.start_condition);
  j["warnings"] = report.warnings;
  return j;
}

Json census_json(const SingletonCensus& census) {
  Json j;
  j["domain_lower"] = census.domain_lower;
  j["count"] = census.count;
  j["roots"] = census.roots;
  j["tangency"] = census.tangency;
  return j;
}

Outcome validate_model(const ModelFile& file) {
  const MarketModel& m = file.model;
  const int n = m.n_states();
  Json checks;
  bool all = true;

  {
    Json rows = Json::array();
    bool ok = true;
    for (int x = 0; x < n; ++x) {
      double sum = 0.0;
      bool nonneg = true;
      for (int y = 0; y < n; ++y) {
        sum += m.chain.p(x, y);
        if (m.chain.p(x, y) < 0.0) nonneg = false;
      }
      const bool row_ok = nonneg && std::abs(sum - 1.0) <= 1e-12;
      if (!row_ok) rows.push_back({{"row", x}, {"sum", sum}});
      ok = ok && row_ok;
    }
    checks["stochastic_rows"] = {{"pass", ok}, {"failing_rows", rows}};
    all = all && ok;
  }
  {
    const bool ok = m.chain.irreducible();
    checks["irreducible"] = {{"pass", ok}};
    all = all && ok;
  }
  {
    Json bad = Json::array();
    bool ok = true;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        double sum = 0.0;
        for (int s = m.slot_begin(x, y); s < m.slot_end(x, y); ++s) sum += m.atom_prob[s];
        if (std::abs(sum - 1.0) > 1e-12) {
          bad.push_back({{"from", x}, {"to", y}, {"sum", sum}});
          ok = false;
        }
      }
    checks["atom_probabilities"] = {{"pass", ok}, {"failing_transitions", bad}};
    all = all && ok;
  }
  {
    bool ok = true;
    for (int x = 0; x < n; ++x) ok = ok && m.risk_free[x] > 0.0;
    for (int i = 0; i < m.n_assets; ++i)
      for (int s = 0; s < m.total_atoms(); ++s) ok = ok && m.asset_r(i, s) > 0.0;
    checks["positive_returns"] = {{"pass", ok}};
    all = all && ok;
  }

  Outcome out;
  out.document["command"] = "validate";
  out.document["checks"] = checks;
  out.document["pass"] = all;
  out.summary = all ? "model valid" : "model invalid";
  out.exit_code = all ? 0 : 1;
  return out;
}

namespace {

FramingSpec framing_from_input(const ModelFile& file, const PolicyOrFraming& input) {
  if (input.policy.has_value()) {
    return framing_from_policy(file.model, file.preferences, *input.policy);
  }
  if (!input.varpi.has_value())
    throw validation_error("policy input: expected a policy {c, theta} or a framing {varpi, kappa}");
  std::vector<double> varpi = *input.varpi;
  if (varpi.size() != static_cast<std::size_t>(file.model.n_states()))
    throw validation_error("framing.varpi: expected one entry per state");
  if (input.kappa_constant.has_value())
    return framing_constant(file.model, *input.kappa_constant, std::move(varpi));
  const auto& tensor = *input.kappa_per_atom;
  if (tensor.size() != static_cast<std::size_t>(file.model.n_states()))
    throw validation_error("framing.kappa.per_atom: expected one row per state");
  return make_framing(
      file.model,
      [&](int x, int y, int j) -> double {
        const auto& row = tensor[x];
        if (row.size() != static_cast<std::size_t>(file.model.n_states()))
          throw validation_error("framing.kappa.per_atom[" + std::to_string(x) +
                                 "]: expected one list per next state");
        const auto& atoms = row[y];
        const int expected = file.model.slot_end(x, y) - file.model.slot_begin(x, y);
        if (atoms.size() != static_cast<std::size_t>(expected))
          throw validation_error("framing.kappa.per_atom[" + std::to_string(x) + "][" +
                                 std::to_string(y) + "]: expected " + std::to_string(expected) +
                                 " atom values");
        return atoms[j];
      },
      std::move(varpi));
}

}  // namespace

Outcome solve_utility(const ModelFile& file, const PolicyOrFraming& input,
                      const SolveConfig& config) {
  Outcome out;
  out.document["command"] = "solve-utility";
  const Preferences& prefs = file.preferences;
  const FramingSpec framing = framing_from_input(file, input);

  const GrowthCheck growth = growth_condition(framing, file.model, prefs);
  out.document["growth"] = growth_json(growth);
  if (!growth.pass && !config.force) {
    out.document["refused"] = "growth condition fails; rerun with --force to attempt anyway";
    out.summary = "refused: growth condition fails (beta * delta^(1-rho) = " +
                  std::to_string(growth.product) + ")";
    out.exit_code = 2;
    return out;
  }

  UtilityFunction start;
  if (config.start.empty() || config.start == "default") {
    start = default_start(framing, prefs);
  } else if (config.start == "ones") {
    start.values.assign(file.model.n_states(), 1.0);
  } else if (config.start == "f0") {
    start = gain_loss_floor(framing, prefs);
  } else {
    start.values = parse_vector(config.start);
    if (start.values.size() != static_cast<std::size_t>(file.model.n_states()))
      throw validation_error("--start: expected one value per state");
  }

  IterateOptions opts;
  opts.tol = config.tol;
  opts.max_iter = config.max_iter;
  std::vector<double> trace;
  if (!config.trace_path.empty()) opts.trace = &trace;

  try {
    const IterationReport report = iterate_recursion(start, framing, file.model, prefs, opts);
    write_trace(config.trace_path, trace);
    if (report.negative_framing.has_value())
      out.document["negative_framing"] = negative_framing_json(*report.negative_framing);
    out.document["iterations"] = report.iterations;
    out.document["residual"] = report.final_residual;
    out.document["fixed_point"] = report.fixed_point.values;
    if (input.policy.has_value()) {
      std::vector<double> F(file.model.n_states());
      for (int x = 0; x < file.model.n_states(); ++x)
        F[x] = input.policy->c[x] * report.fixed_point.values[x];
      out.document["utility_per_wealth"] = F;
    }
    out.summary = "converged in " + std::to_string(report.iterations) + " iterations";
    out.exit_code = 0;
    return out;
  } catch (const domain_error& e) {
    write_trace(config.trace_path, trace);
    out.document["failure"] = error_json("domain", e.what());
  } catch (const iteration_limit_error& e) {
    write_trace(config.trace_path, trace);
    Json f = error_json("iteration-limit", e.what());
    f["last_iterate"] = e.last_iterate();
    f["previous_iterate"] = e.previous_iterate();
    f["residual_tail"] = e.residual_tail();
    out.document["failure"] = f;
  } catch (const spectral_error& e) {
    out.document["failure"] = error_json("spectral", e.what());
  }
  // a single-state model admits an exact fixed-point census as diagnosis
  if (file.model.n_states() == 1 && growth.pass) {
    const SingletonCensus census = analyze_singleton(growth.delta, framing.varpi[0], prefs);
    out.document["diagnosis"] = census_json(census);
    out.document["diagnosis"]["note"] =
        census.count == 0 ? "the recursion has no fixed point in this configuration"
                          : "fixed points exist; iteration may need a different start";
  }
  out.summary = "solver failed: " + out.document["failure"]["message"].get<std::string>();
  out.exit_code = 3;
  return out;
}

Outcome solve_portfolio(const ModelFile& file, const SolveConfig& config) {
  Outcome out;
  out.document["command"] = "solve-portfolio";
  if (!file.policy_space.has_value())
    throw validation_error("policy_space: required for the portfolio solve");
  const PolicySpace& space = *file.policy_space;
  const Preferences& prefs = file.preferences;

  const VerificationReport ver = verify_feasibility(file.model, prefs, space);
  out.document["verification"] = verification_json(ver);
  if (ver.status == VerificationStatus::failed && !config.force) {
    out.document["refused"] =
        "verification failed; rerun with --force to attempt the solve anyway";
    out.summary = "refused: verification failed";
    out.exit_code = 2;
    return out;
  }
  if (ver.status == VerificationStatus::uncertified)
    out.summary = "warning: solvability not fully certified (sufficient conditions inconclusive)\n";

  BellmanOptions opts;
  opts.tol = config.tol;
  opts.max_iter = config.max_iter;
  std::vector<double> trace;
  if (!config.trace_path.empty()) opts.trace = &trace;
  if (!config.start.empty() && config.start != "default") {
    if (config.start == "ones") {
      opts.start = std::vector<double>(file.model.n_states(), 1.0);
    } else if (config.start == "phi0") {
      opts.start = seed_value_function(file.model, prefs, space);
    } else {
      opts.start = parse_vector(config.start);
      if (opts.start->size() != static_cast<std::size_t>(file.model.n_states()))
        throw validation_error("--start: expected one value per state");
    }
  }

  try {
    const BellmanReport report = solve_bellman(file.model, prefs, space, opts);
    write_trace(config.trace_path, trace);
    out.document["Phi"] = report.Phi;
    out.document["policy"] = policy_json(report.policy, file.model.n_assets);
    out.document["iterations"] = report.iterations;
    out.document["residual"] = report.final_residual;
    out.document["started_from_seed"] = report.started_from_seed;
    out.summary += "converged in " + std::to_string(report.iterations) + " iterations";
    out.exit_code = 0;
    return out;
  } catch (const domain_error& e) {
    write_trace(config.trace_path, trace);
    out.document["failure"] = error_json("domain", e.what());
  } catch (const iteration_limit_error& e) {
    write_trace(config.trace_path, trace);
    Json f = error_json("iteration-limit", e.what());
    f["last_iterate"] = e.last_iterate();
    f["previous_iterate"] = e.previous_iterate();
    f["residual_tail"] = e.residual_tail();
    out.document["failure"] = f;
  } catch (const infeasible_return_error& e) {
    out.document["failure"] = error_json("infeasible-return", e.what());
  } catch (const spectral_error& e) {
    out.document["failure"] = error_json("spectral", e.what());
  }
  out.summary += "solver failed: " + out.document["failure"]["message"].get<std::string>();
  out.exit_code = 3;
  return out;
}

Outcome verify(const ModelFile& file, bool evaluate_general_condition) {
  Outcome out;
  out.document["command"] = "verify";
  if (!file.policy_space.has_value())
    throw validation_error("policy_space: required for verification");
  VerifyOptions options;
  options.evaluate_general_condition = evaluate_general_condition;
  const VerificationReport ver =
      verify_feasibility(file.model, file.preferences, *file.policy_space, options);
  out.document["verification"] = verification_json(ver);
  out.document["pass"] = ver.status != VerificationStatus::failed;
  out.summary = std::string("verification: ") + to_string(ver.status);
  out.exit_code = ver.status == VerificationStatus::failed ? 2 : 0;
  return out;
}

Outcome reproduce_example(const SolveConfig& config) {
  Outcome out;
  out.document["command"] = "reproduce-paper-example";
  const ModelFile file = example_two_state_market();
  const MarketModel& model = file.model;
  const Preferences& prefs = file.preferences;
  const ExampleReference ref;

  std::vector<double> g(2);
  for (int x = 0; x < 2; ++x) g[x] = gain_loss_per_unit(model, prefs, x, 0);
  out.document["gain_loss"] = g;

  const ReturnMoments moments = stationary_return_moments(model, 0);
  Json calib;
  calib["mean"] = moments.mean;
  calib["stdev"] = moments.stdev;
  calib["equity_premium"] = moments.mean - model.risk_free[0];
  calib["volatility_convention"] =
      "unconditional one-period standard deviation under the stationary law";
  out.document["calibration"] = calib;

  VerifyOptions vopts;
  vopts.evaluate_general_condition = true;
  const VerificationReport ver = verify_feasibility(model, prefs, *file.policy_space, vopts);
  out.document["verification"] = verification_json(ver);

  BellmanOptions opts;
  opts.tol = config.tol;
  opts.max_iter = config.max_iter;
  const BellmanReport solved = solve_bellman(model, prefs, *file.policy_space, opts);
  Json sol;
  sol["c"] = solved.policy.c;
  sol["theta"] = {solved.policy.t(0, 0, 1), solved.policy.t(1, 0, 1)};
  sol["Phi"] = solved.Phi;
  sol["iterations"] = solved.iterations;
  out.document["solution"] = sol;

  Json reference;
  reference["g"] = {ref.g[0], ref.g[1]};
  reference["mean"] = ref.mean;
  reference["stdev"] = ref.stdev;
  reference["equity_premium"] = ref.premium;
  reference["c"] = {ref.c[0], ref.c[1]};
  reference["theta"] = {ref.theta[0], ref.theta[1]};
  reference["Phi"] = {ref.phi[0], ref.phi[1]};
  out.document["reference"] = reference;

  Json cmp = Json::array();
  bool all = true;
  const auto compare = [&](const std::string& name, double got, double want, double tol) {
    const double err = std::abs(got - want);
    const bool ok = err <= tol;
    cmp.push_back({{"name", name}, {"got", got}, {"want", want}, {"tol", tol}, {"pass", ok}});
    all = all && ok;
  };
  compare("g[0]", g[0], ref.g[0], ref.g_tol);
  compare("g[1]", g[1], ref.g[1], ref.g_tol);
  compare("mean", moments.mean, ref.mean, ref.mean_tol);
  compare("stdev", moments.stdev, ref.stdev, ref.stdev_tol);
  compare("equity_premium", moments.mean - model.risk_free[0], ref.premium, ref.premium_tol);
  compare("c[0]", solved.policy.c[0], ref.c[0], ref.c_tol);
  compare("c[1]", solved.policy.c[1], ref.c[1], ref.c_tol);
  compare("theta[0]", solved.policy.t(0, 0, 1), ref.theta[0], ref.theta_tol);
  compare("theta[1]", solved.policy.t(1, 0, 1), ref.theta[1], ref.theta_tol);
  {
    // the first allocation must sit exactly on the upper bound
    const bool at_bound = solved.policy.t(0, 0, 1) == file.policy_space->t_hi(0, 0, 1);
    cmp.push_back({{"name", "theta[0] at upper bound"}, {"pass", at_bound}});
    all = all && at_bound;
  }
  compare("Phi[0]", solved.Phi[0], ref.phi[0], ref.phi_tol);
  compare("Phi[1]", solved.Phi[1], ref.phi[1], ref.phi_tol);
  out.document["comparison"] = cmp;
  out.document["pass"] = all;

  out.summary = all ? "all reference values reproduced" : "MISMATCH against reference values";
  out.exit_code = all ? 0 : 3;
  return out;
}

Outcome analyze_singleton_workflow(double beta, double rho, double gamma, double delta,
                                   double varpi) {
  Preferences prefs;
  prefs.beta = beta;
  prefs.rho = rho;
  prefs.gamma = gamma;
  prefs.validate();
  Outcome out;
  out.document["command"] = "analyze-singleton";
  out.document["delta"] = delta;
  out.document["varpi"] = varpi;
  const SingletonCensus census = analyze_singleton(delta, varpi, prefs);
  out.document["census"] = census_json(census);
  out.summary = "fixed points: " + std::to_string(census.count);
  out.exit_code = 0;
  return out;
}

}  // namespace regal::workflows
