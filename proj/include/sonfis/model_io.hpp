#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sonfis/dataset.hpp"
#include "sonfis/error.hpp"
#include "sonfis/kv_config.hpp"
#include "sonfis/nfis.hpp"

namespace sonfis {

/// A trained rule base together with the normalization it expects, so it can
/// be applied to raw data.
struct Model {
  RuleBase rulebase;
  NormalizationSpec norm;
  std::vector<std::string> column_names;

  bool operator==(const Model&) const = default;
};

/// One parameter per line with 17 significant digits, e.g.
///   rule.0.input.2.sigma = 0.21348987301948133
///   rule.0.p.0 = 0.52
inline std::string serialize_model(const Model& m) {
  const auto real = [](double v) { return format_sig(v, 17); };
  std::string out = "format = sonfis-model-1\n";
  out += "n_inputs = " + std::to_string(m.rulebase.n_inputs) + "\n";
  out += "n_rules = " + std::to_string(m.rulebase.size()) + "\n";
  for (std::size_t j = 0; j < m.column_names.size(); ++j)
    out += "column." + std::to_string(j) + " = " + m.column_names[j] + "\n";
  for (std::size_t j = 0; j < m.norm.inputs.size(); ++j) {
    out += "norm.input." + std::to_string(j) + ".min = " + real(m.norm.inputs[j].min) + "\n";
    out += "norm.input." + std::to_string(j) + ".max = " + real(m.norm.inputs[j].max) + "\n";
  }
  out += "norm.decision.min = " + real(m.norm.decision.min) + "\n";
  out += "norm.decision.max = " + real(m.norm.decision.max) + "\n";
  for (std::size_t k = 0; k < m.rulebase.size(); ++k) {
    const auto& rule = m.rulebase.rules[k];
    const std::string rk = "rule." + std::to_string(k);
    for (std::size_t j = 0; j < rule.antecedent.size(); ++j) {
      const std::string rj = rk + ".input." + std::to_string(j);
      out += rj + ".c = " + real(rule.antecedent[j].c) + "\n";
      out += rj + ".sigma = " + real(rule.antecedent[j].sigma) + "\n";
      out += rj + ".b = " + real(rule.antecedent[j].b) + "\n";
    }
    for (std::size_t j = 0; j < rule.consequent.size(); ++j)
      out += rk + ".p." + std::to_string(j) + " = " + real(rule.consequent[j]) + "\n";
  }
  return out;
}

inline Model parse_model(const KeyValueConfig& kv) {
  if (kv.find("format") != std::optional<std::string>("sonfis-model-1"))
    throw ValidationError("not a sonfis model file (missing 'format = sonfis-model-1')");
  Model m;
  const auto n = static_cast<std::size_t>(kv.require_uint("n_inputs"));
  const auto rules = static_cast<std::size_t>(kv.require_uint("n_rules"));
  if (rules < 1) throw ValidationError("model has no rules");
  for (std::size_t j = 0; j <= n; ++j) m.column_names.push_back(kv.require_string("column." + std::to_string(j)));
  m.norm.inputs.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    m.norm.inputs[j].min = kv.require_real("norm.input." + std::to_string(j) + ".min");
    m.norm.inputs[j].max = kv.require_real("norm.input." + std::to_string(j) + ".max");
  }
  m.norm.decision.min = kv.require_real("norm.decision.min");
  m.norm.decision.max = kv.require_real("norm.decision.max");
  m.rulebase.n_inputs = n;
  m.rulebase.rules.resize(rules);
  for (std::size_t k = 0; k < rules; ++k) {
    auto& rule = m.rulebase.rules[k];
    const std::string rk = "rule." + std::to_string(k);
    rule.antecedent.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::string rj = rk + ".input." + std::to_string(j);
      rule.antecedent[j] = {kv.require_real(rj + ".c"), kv.require_real(rj + ".sigma"), kv.require_real(rj + ".b")};
    }
    rule.consequent.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) rule.consequent[j] = kv.require_real(rk + ".p." + std::to_string(j));
  }
  m.rulebase.validate();
  return m;
}

inline void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << serialize_model(m);
}

inline Model load_model(const std::filesystem::path& path) { return parse_model(KeyValueConfig::load(path)); }

}  // namespace sonfis
