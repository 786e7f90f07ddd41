// Python bindings for the solver: model loading, the gain-loss and
// calibration diagnostics, and the solve/verify workflows.  Reports come
// back as plain python dicts mirroring the CLI's JSON documents.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "regal/reports.hpp"

namespace py = pybind11;
using namespace regal;

namespace {

py::object to_py(const workflows::Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

workflows::SolveConfig make_config(double tol, long max_iter, const std::string& start,
                                   bool force) {
  workflows::SolveConfig config;
  config.tol = tol;
  config.max_iter = max_iter;
  config.start = start;
  config.force = force;
  return config;
}

class Model {
public:
  explicit Model(ModelFile file) : file_(std::move(file)) {}

  static Model load(const std::string& path) { return Model(load_model_file(path)); }
  static Model loads(const std::string& text) { return Model(parse_model_json(text)); }
  static Model example() { return Model(example_two_state_market()); }

  int n_states() const { return file_.model.n_states(); }
  int n_assets() const { return file_.model.n_assets; }
  std::vector<std::string> state_names() const { return file_.state_names; }

  std::vector<double> gain_loss() const {
    std::vector<double> g(file_.model.n_assets * file_.model.n_states());
    for (int i = 0; i < file_.model.n_assets; ++i)
      for (int x = 0; x < file_.model.n_states(); ++x)
        g[static_cast<std::size_t>(i) * file_.model.n_states() + x] =
            gain_loss_per_unit(file_.model, file_.preferences, x, i);
    return g;
  }

  std::vector<double> stationary() const { return stationary_distribution(file_.model.chain); }

  py::dict calibration(int asset) const {
    const ReturnMoments mom = stationary_return_moments(file_.model, asset);
    py::dict out;
    out["mean"] = mom.mean;
    out["stdev"] = mom.stdev;
    return out;
  }

  py::object validate() const {
    return to_py(workflows::validate_model(file_).document);
  }

  py::object verify(bool general) const {
    return to_py(workflows::verify(file_, general).document);
  }

  py::object solve_portfolio(double tol, long max_iter, const std::string& start,
                             bool force) const {
    return to_py(
        workflows::solve_portfolio(file_, make_config(tol, max_iter, start, force)).document);
  }

  py::object solve_utility_policy(const std::vector<double>& c,
                                  const std::vector<std::vector<double>>& theta, double tol,
                                  long max_iter, bool force) const {
    PolicyOrFraming input;
    Policy policy;
    policy.c = c;
    for (const auto& row : theta) policy.theta.insert(policy.theta.end(), row.begin(), row.end());
    input.policy = std::move(policy);
    return to_py(
        workflows::solve_utility(file_, input, make_config(tol, max_iter, "", force)).document);
  }

  py::object solve_utility_framing(const std::vector<double>& varpi, double kappa, double tol,
                                   long max_iter, bool force) const {
    PolicyOrFraming input;
    input.varpi = varpi;
    input.kappa_constant = kappa;
    return to_py(
        workflows::solve_utility(file_, input, make_config(tol, max_iter, "", force)).document);
  }

private:
  ModelFile file_;
};

}  // namespace

PYBIND11_MODULE(_regal, m) {
  m.doc() = "recursive-utility and consumption-portfolio solver on finite Markov chains";

  py::register_exception<validation_error>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<model_error>(m, "ModelError", PyExc_ValueError);

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def_static("loads", &Model::loads, py::arg("text"))
      .def_property_readonly("n_states", &Model::n_states)
      .def_property_readonly("n_assets", &Model::n_assets)
      .def_property_readonly("state_names", &Model::state_names)
      .def("gain_loss", &Model::gain_loss)
      .def("stationary", &Model::stationary)
      .def("calibration", &Model::calibration, py::arg("asset") = 0)
      .def("validate", &Model::validate)
      .def("verify", &Model::verify, py::arg("general") = false)
      .def("solve_portfolio", &Model::solve_portfolio, py::arg("tol") = 1e-12,
           py::arg("max_iter") = 1000000L, py::arg("start") = std::string(),
           py::arg("force") = false)
      .def("solve_utility", &Model::solve_utility_policy, py::arg("c"), py::arg("theta"),
           py::arg("tol") = 1e-12, py::arg("max_iter") = 1000000L, py::arg("force") = false)
      .def("solve_utility_framing", &Model::solve_utility_framing, py::arg("varpi"),
           py::arg("kappa"), py::arg("tol") = 1e-12, py::arg("max_iter") = 1000000L,
           py::arg("force") = false);

  m.def("example_model", &Model::example, "the built-in two-state market");

  m.def(
      "aggregate",
      [](double c, double z, double beta, double rho) {
        Preferences p;
        p.beta = beta;
        p.rho = rho;
        p.gamma = 2.0;
        return aggregate(c, z, p);
      },
      py::arg("c"), py::arg("z"), py::arg("beta"), py::arg("rho"),
      "CES aggregator of consumption and continuation value");

  m.def(
      "certainty_equivalent",
      [](const std::vector<std::pair<double, double>>& atoms, double gamma) {
        std::vector<Atom> a;
        a.reserve(atoms.size());
        for (const auto& [value, prob] : atoms) a.push_back({value, prob});
        Preferences p;
        p.beta = 0.5;
        p.rho = 0.5;
        p.gamma = gamma;
        return certainty_equivalent(a, p);
      },
      py::arg("atoms"), py::arg("gamma"),
      "CRRA certainty equivalent of (value, probability) atoms");

  m.def(
      "analyze_singleton",
      [](double beta, double rho, double delta, double varpi, double gamma) {
        return to_py(
            workflows::analyze_singleton_workflow(beta, rho, gamma, delta, varpi).document);
      },
      py::arg("beta"), py::arg("rho"), py::arg("delta"), py::arg("varpi"), py::arg("gamma") = 2.0,
      "fixed-point census of the single-state recursion");

  m.def("reproduce_example", [] {
    return to_py(workflows::reproduce_example({}).document);
  });
}
