#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sonfis/dataset.hpp"
#include "sonfis/error.hpp"
#include "sonfis/numeric_format.hpp"
#include "sonfis/rng.hpp"

namespace sonfis {

inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kShapeFloor = 0.1;
inline constexpr double kMinFiring = 1e-9;
inline constexpr double kRidge = 1e-8;

/// Generalized bell 1 / (1 + |(x - c) / sigma|^(2b)).
struct MembershipFunction {
  double c = 0.0;
  double sigma = 1.0;
  double b = 1.0;

  void apply_floors() {
    sigma = std::max(sigma, kSigmaFloor);
    b = std::max(b, kShapeFloor);
  }

  bool operator==(const MembershipFunction&) const = default;
};

inline double mf_eval(const MembershipFunction& mf, double x) {
  const double z = std::abs((x - mf.c) / mf.sigma);
  return 1.0 / (1.0 + std::pow(z, 2.0 * mf.b));
}

/// TSK rule with a scatter-partition antecedent (one MF per input) and a
/// linear consequent p_0 + sum_j p_j x_j.
struct Rule {
  std::vector<MembershipFunction> antecedent;
  std::vector<double> consequent;

  bool operator==(const Rule&) const = default;
};

struct RuleBase {
  std::vector<Rule> rules;
  std::size_t n_inputs = 0;

  std::size_t size() const { return rules.size(); }

  void validate() const {
    if (rules.empty()) throw ValidationError("rule base needs at least one rule");
    for (std::size_t k = 0; k < rules.size(); ++k) {
      if (rules[k].antecedent.size() != n_inputs || rules[k].consequent.size() != n_inputs + 1)
        throw ValidationError("rule " + std::to_string(k) + " does not match input arity " +
                              std::to_string(n_inputs));
      for (const auto& mf : rules[k].antecedent) {
        if (!(mf.sigma >= kSigmaFloor) || !(mf.b >= kShapeFloor))
          throw ValidationError("rule " + std::to_string(k) + " has a membership function below its floors");
      }
    }
  }

  bool operator==(const RuleBase&) const = default;
};

struct NfisTrainConfig {
  std::size_t epochs = 50;
  double lr = 0.01;
  double min_firing = kMinFiring;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ValidationError("nfis.epochs must be >= 1");
    if (!(lr >= 0.0)) throw ValidationError("nfis.lr must be >= 0");
    if (!(min_firing > 0.0)) throw ValidationError("nfis.min_firing must be > 0");
  }
};

namespace detail {

inline void check_arity(const RuleBase& rb, std::size_t n) {
  if (n != rb.n_inputs)
    throw ValidationError("input has arity " + std::to_string(n) + ", rule base expects " +
                          std::to_string(rb.n_inputs));
}

inline double raw_strength(const Rule& rule, std::span<const double> x) {
  double w = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) w *= mf_eval(rule.antecedent[j], x[j]);
  return w;
}

}  // namespace detail

/// Product T-norm over inputs, floored at `min_firing`.
inline std::vector<double> firing_strengths(const RuleBase& rb, std::span<const double> x,
                                            double min_firing = kMinFiring) {
  detail::check_arity(rb, x.size());
  std::vector<double> w(rb.size());
  for (std::size_t k = 0; k < rb.size(); ++k)
    w[k] = std::max(detail::raw_strength(rb.rules[k], x), min_firing);
  return w;
}

inline double eval_consequent(const Rule& rule, std::span<const double> x) {
  if (rule.consequent.size() != x.size() + 1)
    throw ValidationError("consequent has " + std::to_string(rule.consequent.size()) +
                          " weights for arity " + std::to_string(x.size()));
  double y = rule.consequent[0];
  for (std::size_t j = 0; j < x.size(); ++j) y += rule.consequent[j + 1] * x[j];
  return y;
}

/// Firing strengths divided by their sum.
inline std::vector<double> normalized_strengths(const RuleBase& rb, std::span<const double> x,
                                                double min_firing = kMinFiring) {
  auto w = firing_strengths(rb, x, min_firing);
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

/// Weighted-average TSK output.
inline double infer(const RuleBase& rb, std::span<const double> x, double min_firing = kMinFiring) {
  const auto nw = normalized_strengths(rb, x, min_firing);
  double y = 0.0;
  for (std::size_t k = 0; k < rb.size(); ++k) y += nw[k] * eval_consequent(rb.rules[k], x);
  return y;
}

inline std::vector<double> predict(const RuleBase& rb, const Dataset& data, double min_firing = kMinFiring) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& r : data.records) out.push_back(infer(rb, r.inputs, min_firing));
  return out;
}

inline double sum_squared_residuals(const RuleBase& rb, const Dataset& data, double min_firing = kMinFiring) {
  double s = 0.0;
  for (const auto& r : data.records) {
    const double e = infer(rb, r.inputs, min_firing) - r.decision;
    s += e * e;
  }
  return s;
}

inline double training_rmse(const RuleBase& rb, const Dataset& data, double min_firing = kMinFiring) {
  if (data.empty()) throw ValidationError("rmse of an empty dataset");
  return std::sqrt(sum_squared_residuals(rb, data, min_firing) / static_cast<double>(data.size()));
}

// ---------------------------------------------------------------------------
// Initialization: seeded k-means over granule inputs.

/// One rule per k-means cluster of the granule inputs (k-means++ seeding,
/// 50 Lloyd iterations). Centres are the centroids, widths the per-coordinate
/// cluster standard deviation floored at 0.1, b = 1, and consequents start as
/// the constant cluster-mean decision.
inline RuleBase init_rulebase(const Dataset& granules, std::size_t n_rules, std::uint64_t seed) {
  if (granules.empty()) throw ValidationError("init_rulebase: no granules");
  if (n_rules < 1) throw ValidationError("init_rulebase: n_rules must be >= 1");
  validate(granules);

  const std::size_t n = granules.n_inputs;
  const std::size_t count = granules.size();
  const auto& recs = granules.records;
  {
    std::set<std::vector<double>> distinct;
    for (const auto& r : recs) distinct.insert(r.inputs);
    if (n_rules > distinct.size())
      throw GranulationError("requested " + std::to_string(n_rules) + " rules but only " +
                             std::to_string(distinct.size()) + " distinct granules exist");
  }

  auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
  };

  Rng rng(seed);
  std::vector<std::vector<double>> centroids;
  centroids.push_back(recs[rng.index(count)].inputs);
  std::vector<double> d2(count);
  while (centroids.size() < n_rules) {
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) d2[i] = std::min(d2[i], dist2(recs[i].inputs, c));
      total += d2[i];
    }
    double target = rng.uniform() * total;
    std::size_t pick = count;
    for (std::size_t i = 0; i < count; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      target -= d2[i];
      if (target < 0.0) break;
    }
    centroids.push_back(recs[pick].inputs);
  }

  std::vector<std::size_t> assign(count, 0);
  for (int iter = 0; iter < 50; ++iter) {
    for (std::size_t i = 0; i < count; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n_rules; ++k) {
        const double d = dist2(recs[i].inputs, centroids[k]);
        if (d < best) {
          best = d;
          assign[i] = k;
        }
      }
    }
    std::vector<std::size_t> sizes(n_rules, 0);
    std::vector<std::vector<double>> sums(n_rules, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < count; ++i) {
      ++sizes[assign[i]];
      for (std::size_t j = 0; j < n; ++j) sums[assign[i]][j] += recs[i].inputs[j];
    }
    for (std::size_t k = 0; k < n_rules; ++k) {
      if (sizes[k] == 0) {
        // Restart an empty cluster at the point worst served by its centroid.
        std::size_t worst = 0;
        double worst_d = -1.0;
        for (std::size_t i = 0; i < count; ++i) {
          const double d = dist2(recs[i].inputs, centroids[assign[i]]);
          if (d > worst_d) {
            worst_d = d;
            worst = i;
          }
        }
        centroids[k] = recs[worst].inputs;
        assign[worst] = k;
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) centroids[k][j] = sums[k][j] / static_cast<double>(sizes[k]);
    }
  }
  // Final assignment against the converged centroids.
  for (std::size_t i = 0; i < count; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_rules; ++k) {
      const double d = dist2(recs[i].inputs, centroids[k]);
      if (d < best) {
        best = d;
        assign[i] = k;
      }
    }
  }

  RuleBase rb;
  rb.n_inputs = n;
  rb.rules.resize(n_rules);
  for (std::size_t k = 0; k < n_rules; ++k) {
    std::vector<double> var(n, 0.0);
    double decision_sum = 0.0;
    std::size_t members = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (assign[i] != k) continue;
      ++members;
      decision_sum += recs[i].decision;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = recs[i].inputs[j] - centroids[k][j];
        var[j] += d * d;
      }
    }
    auto& rule = rb.rules[k];
    rule.antecedent.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double sd = members ? std::sqrt(var[j] / static_cast<double>(members)) : 0.0;
      rule.antecedent[j] = {centroids[k][j], std::max(sd, 0.1), 1.0};
    }
    rule.consequent.assign(n + 1, 0.0);
    rule.consequent[0] = members ? decision_sum / static_cast<double>(members) : 0.0;
  }
  return rb;
}

// ---------------------------------------------------------------------------
// Hybrid learning

/// Least-squares consequents with premises frozen. Each design row holds the
/// normalized firing strengths times (1, x); the ridge-regularized normal
/// equations are solved by LDLT.
inline RuleBase fit_consequents_lse(const RuleBase& rb, const Dataset& data, double min_firing = kMinFiring) {
  if (data.empty()) throw ValidationError("fit_consequents_lse: empty data");
  detail::check_arity(rb, data.n_inputs);
  const std::size_t n = rb.n_inputs;
  const std::size_t cols = rb.size() * (n + 1);

  Eigen::MatrixXd a(data.size(), cols);
  Eigen::VectorXd t(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records[i];
    const auto nw = normalized_strengths(rb, r.inputs, min_firing);
    for (std::size_t k = 0; k < rb.size(); ++k) {
      const auto base = static_cast<Eigen::Index>(k * (n + 1));
      const auto row = static_cast<Eigen::Index>(i);
      a(row, base) = nw[k];
      for (std::size_t j = 0; j < n; ++j) a(row, base + static_cast<Eigen::Index>(j) + 1) = nw[k] * r.inputs[j];
    }
    t(static_cast<Eigen::Index>(i)) = r.decision;
  }
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += kRidge;
  const Eigen::VectorXd p = normal.ldlt().solve(a.transpose() * t);

  RuleBase out = rb;
  for (std::size_t k = 0; k < rb.size(); ++k)
    for (std::size_t j = 0; j <= n; ++j) out.rules[k].consequent[j] = p(static_cast<Eigen::Index>(k * (n + 1) + j));
  return out;
}

/// Premise parameters flattened as [rule][input][c, sigma, b].
inline std::vector<double> premise_parameters(const RuleBase& rb) {
  std::vector<double> theta;
  theta.reserve(rb.size() * rb.n_inputs * 3);
  for (const auto& rule : rb.rules)
    for (const auto& mf : rule.antecedent) {
      theta.push_back(mf.c);
      theta.push_back(mf.sigma);
      theta.push_back(mf.b);
    }
  return theta;
}

inline RuleBase with_premise_parameters(RuleBase rb, std::span<const double> theta) {
  if (theta.size() != rb.size() * rb.n_inputs * 3)
    throw ValidationError("premise parameter vector has the wrong length");
  std::size_t idx = 0;
  for (auto& rule : rb.rules)
    for (auto& mf : rule.antecedent) {
      mf.c = theta[idx++];
      mf.sigma = theta[idx++];
      mf.b = theta[idx++];
    }
  return rb;
}

/// Analytic gradient of (y(x) - t)^2 with respect to every premise
/// parameter, in premise_parameters() layout. Rules whose raw strength sits
/// below the firing floor contribute zero (the floor is locally constant).
inline std::vector<double> premise_gradient(const RuleBase& rb, const Record& record,
                                            double min_firing = kMinFiring) {
  detail::check_arity(rb, record.inputs.size());
  const std::size_t n = rb.n_inputs;
  const std::size_t m = rb.size();
  const auto& x = record.inputs;

  std::vector<std::vector<double>> mu(m, std::vector<double>(n));
  std::vector<double> raw(m), w(m), f(m);
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    raw[k] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      mu[k][j] = mf_eval(rb.rules[k].antecedent[j], x[j]);
      raw[k] *= mu[k][j];
    }
    w[k] = std::max(raw[k], min_firing);
    f[k] = eval_consequent(rb.rules[k], x);
    total += w[k];
  }
  double y = 0.0;
  for (std::size_t k = 0; k < m; ++k) y += (w[k] / total) * f[k];
  const double err2 = 2.0 * (y - record.decision);

  std::vector<double> grad(m * n * 3, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (raw[k] < min_firing) continue;
    // dE/dw_k
    const double de_dw = err2 * (f[k] - y) / total;
    for (std::size_t j = 0; j < n; ++j) {
      const auto& mf = rb.rules[k].antecedent[j];
      double others = 1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (i != j) others *= mu[k][i];

      // mu = 1 / (1 + g), g = |z|^(2b), z = (x - c) / sigma; dmu/dg = -mu^2.
      const double z = (x[j] - mf.c) / mf.sigma;
      const double az = std::abs(z);
      const double g = std::pow(az, 2.0 * mf.b);
      double dg_dc = 0.0;
      double dg_db = 0.0;
      if (az > 0.0) {
        dg_dc = -2.0 * mf.b * g / az * (z > 0.0 ? 1.0 : -1.0) / mf.sigma;
        dg_db = 2.0 * std::log(az) * g;
      }
      const double dg_dsigma = -2.0 * mf.b * g / mf.sigma;
      const double scale = de_dw * others * -(mu[k][j] * mu[k][j]);

      const std::size_t base = (k * n + j) * 3;
      grad[base + 0] = scale * dg_dc;
      grad[base + 1] = scale * dg_dsigma;
      grad[base + 2] = scale * dg_db;
    }
  }
  return grad;
}

struct HybridResult {
  RuleBase rulebase;
  /// Training RMSE after each epoch, in the units of the training targets.
  std::vector<double> rmse_trace;
};

/// Per epoch: least-squares consequents, then one full-batch gradient step
/// (mean over records) of size cfg.lr on the premises, floors re-applied.
inline HybridResult train_hybrid(const RuleBase& rb, const Dataset& train, const NfisTrainConfig& cfg) {
  if (train.empty()) throw ValidationError("train_hybrid: empty data");
  cfg.validate();
  rb.validate();
  detail::check_arity(rb, train.n_inputs);

  HybridResult res{rb, {}};
  res.rmse_trace.reserve(cfg.epochs);
  const double inv_count = 1.0 / static_cast<double>(train.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    res.rulebase = fit_consequents_lse(res.rulebase, train, cfg.min_firing);
    if (cfg.lr > 0.0) {
      auto theta = premise_parameters(res.rulebase);
      std::vector<double> grad(theta.size(), 0.0);
      for (const auto& r : train.records) {
        const auto g = premise_gradient(res.rulebase, r, cfg.min_firing);
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
      }
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg.lr * grad[i] * inv_count;
      res.rulebase = with_premise_parameters(std::move(res.rulebase), theta);
      for (auto& rule : res.rulebase.rules)
        for (auto& mf : rule.antecedent) mf.apply_floors();
    }
    res.rmse_trace.push_back(training_rmse(res.rulebase, train, cfg.min_firing));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Rule text

/// One IF/THEN line per rule with every parameter mapped back to original
/// units; numbers carry 4 significant digits.
inline std::string extract_rules_text(const RuleBase& rb, const NormalizationSpec& spec,
                                      const std::vector<std::string>& names) {
  if (spec.n_inputs() != rb.n_inputs)
    throw ValidationError("normalization spec arity does not match the rule base");
  if (names.size() != rb.n_inputs + 1)
    throw ValidationError("need " + std::to_string(rb.n_inputs + 1) + " column names");

  const auto& yr = spec.decision;
  const double yspan = yr.constant() ? 0.0 : yr.span();
  std::ostringstream out;
  for (const auto& rule : rb.rules) {
    out << "IF ";
    for (std::size_t j = 0; j < rb.n_inputs; ++j) {
      const auto& mf = rule.antecedent[j];
      const auto& xr = spec.inputs[j];
      const double xspan = xr.constant() ? 0.0 : xr.span();
      if (j) out << " AND ";
      out << names[j] << " is about " << format_sig(xr.denormalize(mf.c), 4) << " (±"
          << format_sig(mf.sigma * xspan, 4) << ", shape " << format_sig(mf.b, 4) << ")";
    }
    // y = ymin + yspan * (p0 + sum_j p_j (x_j - xmin_j) / xspan_j)
    double intercept = yr.min + yspan * rule.consequent[0];
    std::vector<double> slopes(rb.n_inputs, 0.0);
    for (std::size_t j = 0; j < rb.n_inputs; ++j) {
      const auto& xr = spec.inputs[j];
      if (xr.constant()) continue;
      slopes[j] = yspan * rule.consequent[j + 1] / xr.span();
      intercept -= slopes[j] * xr.min;
    }
    out << " THEN " << names.back() << " = " << format_sig(intercept, 4);
    for (std::size_t j = 0; j < rb.n_inputs; ++j) {
      const double s = slopes[j];
      out << (std::signbit(s) ? " - " : " + ") << format_sig(std::abs(s), 4) << "*" << names[j];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace sonfis
