// Command-line front end: model validation, the solver workflows, and the
// built-in example reproduction.  Machine-readable JSON goes to stdout, a
// short human summary to stderr.  Exit codes: 0 success, 1 validation
// failure, 2 verification-gate refusal, 3 solver failure.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "regal/reports.hpp"

namespace {

using regal::workflows::Outcome;
using regal::workflows::SolveConfig;

int emit(const Outcome& outcome) {
  std::cout << outcome.document.dump(2) << "\n";
  if (!outcome.summary.empty()) std::cerr << outcome.summary << "\n";
  return outcome.exit_code;
}

int emit_error(const char* kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cout << j.dump(2) << "\n";
  std::cerr << message << "\n";
  return code;
}

void add_solver_flags(CLI::App* cmd, SolveConfig& config) {
  cmd->add_option("--tol", config.tol, "convergence tolerance (sup-norm residual)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", config.max_iter, "iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--start", config.start,
                  "start: ones | f0 | phi0 | comma-separated values (default: rule-based)");
  cmd->add_flag("--force", config.force, "proceed despite a failed verification gate");
  cmd->add_option("--trace", config.trace_path, "write per-iteration residuals to a CSV file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recursive-utility and consumption-portfolio solver on finite Markov chains"};
  app.require_subcommand(1);

  std::string model_path, policy_path;
  SolveConfig config;
  bool general_condition = false;
  double s_beta = 0.0, s_rho = 0.0, s_gamma = 2.0, s_delta = 0.0, s_varpi = 0.0;

  CLI::App* validate = app.add_subcommand("validate", "structural model diagnostics");
  validate->add_option("--model", model_path, "model file (JSON)")->required();

  CLI::App* solve_u = app.add_subcommand(
      "solve-utility", "solve the utility recursion for a fixed policy or raw framing");
  solve_u->add_option("--model", model_path, "model file (JSON)")->required();
  solve_u->add_option("--policy", policy_path, "policy or framing file (JSON)")->required();
  add_solver_flags(solve_u, config);

  CLI::App* solve_p =
      app.add_subcommand("solve-portfolio", "solve the consumption-portfolio dynamic program");
  solve_p->add_option("--model", model_path, "model file (JSON)")->required();
  add_solver_flags(solve_p, config);

  CLI::App* verify = app.add_subcommand("verify", "run the solvability verification only");
  verify->add_option("--model", model_path, "model file (JSON)")->required();
  verify->add_flag("--general", general_condition,
                   "also evaluate the general negative-framing condition");

  CLI::App* reproduce = app.add_subcommand(
      "reproduce-paper-example", "re-run the built-in two-state example against its reference values");
  add_solver_flags(reproduce, config);

  CLI::App* singleton =
      app.add_subcommand("analyze-singleton", "fixed-point census of the single-state recursion");
  singleton->add_option("--beta", s_beta, "discount factor")->required();
  singleton->add_option("--rho", s_rho, "inverse elasticity of intertemporal substitution")
      ->required();
  singleton->add_option("--gamma", s_gamma, "relative risk aversion (unused by the census)");
  singleton->add_option("--delta", s_delta, "certainty-equivalent growth rate")->required();
  singleton->add_option("--varpi", s_varpi, "per-period gain-loss utility")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const regal::ModelFile file = regal::load_model_file(model_path, /*validate=*/false);
      return emit(regal::workflows::validate_model(file));
    }
    if (solve_u->parsed()) {
      const regal::ModelFile file = regal::load_model_file(model_path);
      const regal::PolicyOrFraming input = regal::load_policy_file(policy_path);
      return emit(regal::workflows::solve_utility(file, input, config));
    }
    if (solve_p->parsed()) {
      const regal::ModelFile file = regal::load_model_file(model_path);
      return emit(regal::workflows::solve_portfolio(file, config));
    }
    if (verify->parsed()) {
      const regal::ModelFile file = regal::load_model_file(model_path);
      return emit(regal::workflows::verify(file, general_condition));
    }
    if (reproduce->parsed()) {
      return emit(regal::workflows::reproduce_example(config));
    }
    if (singleton->parsed()) {
      return emit(
          regal::workflows::analyze_singleton_workflow(s_beta, s_rho, s_gamma, s_delta, s_varpi));
    }
  } catch (const regal::validation_error& e) {
    return emit_error("validation", e.what(), 1);
  } catch (const regal::model_error& e) {
    return emit_error("model", e.what(), 1);
  } catch (const regal::domain_error& e) {
    return emit_error("domain", e.what(), 3);
  } catch (const regal::error& e) {
    return emit_error("solver", e.what(), 3);
  }
  return 0;
}
