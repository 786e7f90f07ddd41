#include "regal/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace regal {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw validation_error(path + ": " + what);
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing");
  return *it;
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::vector<double> number_array(const json& j, const std::string& path,
                                 std::size_t expected = 0) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
  if (expected != 0 && out.size() != expected)
    fail(path, "expected " + std::to_string(expected) + " entries, found " +
                   std::to_string(out.size()));
  return out;
}

std::vector<Atom> atom_array(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of atoms");
  std::vector<Atom> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    Atom a;
    a.value = number_at(require(j[i], p, "value"), p + ".value");
    a.prob = number_at(require(j[i], p, "prob"), p + ".prob");
    if (!(a.value >= 0.0)) fail(p + ".value", "must be nonnegative");
    if (!(a.prob >= 0.0)) fail(p + ".prob", "must be nonnegative");
    out.push_back(a);
  }
  return out;
}

Preferences parse_preferences(const json& j, const std::string& path) {
  Preferences p;
  p.beta = number_at(require(j, path, "beta"), path + ".beta");
  p.rho = number_at(require(j, path, "rho"), path + ".rho");
  p.gamma = number_at(require(j, path, "gamma"), path + ".gamma");
  if (j.contains("loss_aversion_k"))
    p.loss_aversion_k = number_at(j["loss_aversion_k"], path + ".loss_aversion_k");
  if (j.contains("framing_weights_b"))
    p.framing_weights_b = number_array(j["framing_weights_b"], path + ".framing_weights_b");
  p.validate();
  return p;
}

struct Bound {
  double lo, hi;
};

Bound parse_bound(const json& j, const std::string& path) {
  Bound b;
  b.lo = number_at(require(j, path, "lo"), path + ".lo");
  b.hi = number_at(require(j, path, "hi"), path + ".hi");
  return b;
}

PolicySpace parse_policy_space(const json& j, const std::string& path, int n, int na) {
  PolicySpace s;
  const json& cons = require(j, path, "consumption");
  if (cons.is_object()) {
    const Bound b = parse_bound(cons, path + ".consumption");
    s.c_lo.assign(n, b.lo);
    s.c_hi.assign(n, b.hi);
  } else if (cons.is_array()) {
    if (cons.size() != static_cast<std::size_t>(n))
      fail(path + ".consumption", "expected one interval per state");
    for (int x = 0; x < n; ++x) {
      const Bound b = parse_bound(cons[x], path + ".consumption[" + std::to_string(x) + "]");
      s.c_lo.push_back(b.lo);
      s.c_hi.push_back(b.hi);
    }
  } else {
    fail(path + ".consumption", "expected an interval or an array of intervals");
  }
  const json& alloc = require(j, path, "allocation");
  s.theta_lo.assign(static_cast<std::size_t>(n) * na, 0.0);
  s.theta_hi.assign(static_cast<std::size_t>(n) * na, 0.0);
  const auto set = [&](int x, int i, const Bound& b) {
    s.theta_lo[static_cast<std::size_t>(x) * na + i] = b.lo;
    s.theta_hi[static_cast<std::size_t>(x) * na + i] = b.hi;
  };
  if (alloc.is_object()) {
    const Bound b = parse_bound(alloc, path + ".allocation");
    for (int x = 0; x < n; ++x)
      for (int i = 0; i < na; ++i) set(x, i, b);
  } else if (alloc.is_array()) {
    if (alloc.size() != static_cast<std::size_t>(n))
      fail(path + ".allocation", "expected one box per state");
    for (int x = 0; x < n; ++x) {
      const json& row = alloc[x];
      const std::string rp = path + ".allocation[" + std::to_string(x) + "]";
      if (!row.is_array() || row.size() != static_cast<std::size_t>(na))
        fail(rp, "expected one bound per asset");
      for (int i = 0; i < na; ++i) set(x, i, parse_bound(row[i], rp + "[" + std::to_string(i) + "]"));
    }
  } else {
    fail(path + ".allocation", "expected a bound or an array of per-state bounds");
  }
  s.validate(n, na);
  return s;
}

}  // namespace

ModelFile parse_model_json(const std::string& text, bool validate) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("model file: ") + e.what());
  }
  ModelFile out;

  // states: a count or a list of names
  int n = 0;
  const json& states = require(j, "model", "states");
  if (states.is_number_integer()) {
    n = states.get<int>();
    for (int i = 0; i < n; ++i) out.state_names.push_back("state" + std::to_string(i));
  } else if (states.is_array()) {
    n = static_cast<int>(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (!states[i].is_string()) fail("states[" + std::to_string(i) + "]", "expected a string");
      out.state_names.push_back(states[i].get<std::string>());
    }
  } else {
    fail("states", "expected a count or an array of names");
  }
  if (n <= 0) fail("states", "must name at least one state");

  MarkovChain chain;
  chain.n_states = n;
  const json& trans = require(j, "model", "transition");
  if (!trans.is_array() || trans.size() != static_cast<std::size_t>(n))
    fail("transition", "expected one row per state");
  for (int x = 0; x < n; ++x) {
    const auto row = number_array(trans[x], "transition[" + std::to_string(x) + "]",
                                  static_cast<std::size_t>(n));
    chain.transition.insert(chain.transition.end(), row.begin(), row.end());
  }

  // noise
  const json& noise = require(j, "model", "noise");
  const json& returns = require(j, "model", "returns");
  std::vector<double> risk_free;
  const json& rf = require(returns, "returns", "risk_free");
  if (rf.is_number()) {
    risk_free.assign(n, rf.get<double>());
  } else {
    risk_free = number_array(rf, "returns.risk_free", static_cast<std::size_t>(n));
  }

  if (noise.contains("shared_atoms")) {
    out.model = make_model_shared_atoms(std::move(chain),
                                        atom_array(noise["shared_atoms"], "noise.shared_atoms"),
                                        std::move(risk_free));
  } else if (noise.contains("per_transition")) {
    const json& per = noise["per_transition"];
    if (!per.is_array() || per.size() != static_cast<std::size_t>(n))
      fail("noise.per_transition", "expected one row per state");
    std::vector<std::vector<std::vector<Atom>>> atoms(n);
    for (int x = 0; x < n; ++x) {
      const std::string rp = "noise.per_transition[" + std::to_string(x) + "]";
      if (!per[x].is_array() || per[x].size() != static_cast<std::size_t>(n))
        fail(rp, "expected one atom list per next state");
      atoms[x].resize(n);
      for (int y = 0; y < n; ++y)
        atoms[x][y] = atom_array(per[x][y], rp + "[" + std::to_string(y) + "]");
    }
    out.model = make_model_per_transition(std::move(chain), atoms, std::move(risk_free));
  } else {
    fail("noise", "expected shared_atoms or per_transition");
  }

  // assets
  const json& assets = require(returns, "returns", "assets");
  if (!assets.is_array()) fail("returns.assets", "expected an array");
  for (std::size_t i = 0; i < assets.size(); ++i) {
    const std::string ap = "returns.assets[" + std::to_string(i) + "]";
    const json& a = assets[i];
    if (!a.is_object()) fail(ap, "expected an object");
    out.asset_names.push_back(a.contains("name") && a["name"].is_string()
                                  ? a["name"].get<std::string>()
                                  : "asset" + std::to_string(i));
    if (a.contains("price_dividend")) {
      const auto phi = number_array(require(a["price_dividend"], ap + ".price_dividend", "phi"),
                                    ap + ".price_dividend.phi", static_cast<std::size_t>(n));
      add_asset_price_dividend(out.model, phi);
    } else if (a.contains("table")) {
      const json& t = a["table"];
      if (!t.is_array() || t.size() != static_cast<std::size_t>(n))
        fail(ap + ".table", "expected one row per state");
      std::vector<double> flat(out.model.total_atoms());
      for (int x = 0; x < n; ++x) {
        if (!t[x].is_array() || t[x].size() != static_cast<std::size_t>(n))
          fail(ap + ".table[" + std::to_string(x) + "]", "expected one list per next state");
        for (int y = 0; y < n; ++y) {
          const int b = out.model.slot_begin(x, y), e = out.model.slot_end(x, y);
          const auto vals =
              number_array(t[x][y], ap + ".table[" + std::to_string(x) + "][" + std::to_string(y) +
                                        "]", static_cast<std::size_t>(e - b));
          for (int s = b; s < e; ++s) flat[s] = vals[s - b];
        }
      }
      add_asset_table(out.model, flat);
    } else {
      fail(ap, "expected table or price_dividend");
    }
  }

  out.preferences = parse_preferences(require(j, "model", "preferences"), "preferences");
  if (out.preferences.framing_weights_b.empty())
    out.preferences.framing_weights_b.assign(out.model.n_assets, 0.0);
  if (out.preferences.framing_weights_b.size() != static_cast<std::size_t>(out.model.n_assets))
    fail("preferences.framing_weights_b", "expected one weight per asset");

  if (j.contains("policy_space"))
    out.policy_space = parse_policy_space(j["policy_space"], "policy_space", n, out.model.n_assets);

  if (validate) out.model.validate();
  return out;
}

ModelFile load_model_file(const std::string& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw validation_error("model file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_json(buf.str(), validate);
}

PolicyOrFraming parse_policy_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("policy file: ") + e.what());
  }
  PolicyOrFraming out;
  if (j.contains("c")) {
    Policy p;
    p.c = number_array(j["c"], "policy.c");
    const json& th = require(j, "policy", "theta");
    if (!th.is_array() || th.size() != p.c.size())
      fail("policy.theta", "expected one allocation row per state");
    std::size_t row_len = 0;
    for (std::size_t x = 0; x < th.size(); ++x) {
      const auto row = number_array(th[x], "policy.theta[" + std::to_string(x) + "]");
      if (x == 0)
        row_len = row.size();
      else if (row.size() != row_len)
        fail("policy.theta[" + std::to_string(x) + "]", "ragged allocation rows");
      p.theta.insert(p.theta.end(), row.begin(), row.end());
    }
    out.policy = std::move(p);
    return out;
  }
  if (j.contains("varpi")) {
    out.varpi = number_array(j["varpi"], "framing.varpi");
    const json& k = require(j, "framing", "kappa");
    if (k.is_object() && k.contains("constant")) {
      out.kappa_constant = number_at(k["constant"], "framing.kappa.constant");
    } else if (k.is_object() && k.contains("per_atom")) {
      const json& per = k["per_atom"];
      if (!per.is_array()) fail("framing.kappa.per_atom", "expected [state][state][atom] values");
      std::vector<std::vector<std::vector<double>>> tensor;
      for (std::size_t x = 0; x < per.size(); ++x) {
        const std::string xp = "framing.kappa.per_atom[" + std::to_string(x) + "]";
        if (!per[x].is_array()) fail(xp, "expected one list per next state");
        tensor.emplace_back();
        for (std::size_t y = 0; y < per[x].size(); ++y)
          tensor.back().push_back(number_array(per[x][y], xp + "[" + std::to_string(y) + "]"));
      }
      out.kappa_per_atom = std::move(tensor);
    } else {
      fail("framing.kappa", "expected {constant: v} or {per_atom: [[[...]]]}");
    }
    return out;
  }
  fail("policy", "expected either a policy {c, theta} or a framing {varpi, kappa}");
}

PolicyOrFraming load_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("policy file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_policy_json(buf.str());
}

}  // namespace regal
