#pragma once

#include <optional>
#include <string>
#include <vector>

#include "regal/market_model.hpp"
#include "regal/policy.hpp"
#include "regal/preferences.hpp"

namespace regal {

/// A fully parsed model file: market environment, preferences and (when
/// present) the policy space.
struct ModelFile {
  MarketModel model;
  Preferences preferences;
  std::optional<PolicySpace> policy_space;
  std::vector<std::string> state_names;
  std::vector<std::string> asset_names;
};

/// Parses the JSON model document.  Fields: states, transition,
/// noise {shared_atoms | per_transition}, returns {risk_free, assets
/// [{name, table | price_dividend{phi}}]}, preferences, policy_space.
/// Validation errors name the offending field by path.  With `validate`
/// false only the document shape is enforced, so that the validate
/// workflow can report the semantic checks one by one.
ModelFile parse_model_json(const std::string& text, bool validate = true);

/// Reads and parses a model file from disk.
ModelFile load_model_file(const std::string& path, bool validate = true);

/// Policy or raw framing document used by the utility solve workflow:
/// either {"c": [...], "theta": [[...per asset...], ...]} or
/// {"varpi": [...], "kappa": {"constant": v} | {"per_atom": [[[...]]]}}.
struct PolicyOrFraming {
  std::optional<Policy> policy;
  std::optional<std::vector<double>> varpi;
  std::optional<double> kappa_constant;
  std::optional<std::vector<std::vector<std::vector<double>>>> kappa_per_atom;
};
PolicyOrFraming parse_policy_json(const std::string& text);
PolicyOrFraming load_policy_file(const std::string& path);

}  // namespace regal
