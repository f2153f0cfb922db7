#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sonfis/dataset.hpp"
#include "sonfis/error.hpp"
#include "sonfis/nfis.hpp"
#include "sonfis/numeric_format.hpp"
#include "sonfis/rng.hpp"
#include "sonfis/som.hpp"

namespace sonfis {

/// sqrt(sum (p_i - a_i)^2 / m).
inline double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw ValidationError("rmse: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(actual.size()) + " targets");
  if (predicted.empty()) throw ValidationError("rmse: no samples");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - actual[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

/// Neuron-growth law: N_{t+1} = alpha N_t + beta E_t + gamma.
inline double next_neuron_count(double n_t, double e_t, double alpha, double beta, double gamma) {
  return alpha * n_t + (beta * e_t + gamma);
}

struct IterationRecord {
  std::size_t t = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t neuron_count = 0;
  std::size_t n_rules = 0;
  /// Denormalized RMSE over the full training split.
  double rmse_train = std::numeric_limits<double>::infinity();
  /// Denormalized RMSE over the test split (E_t).
  double rmse_test = std::numeric_limits<double>::infinity();
  std::uint64_t seed_used = 0;
  bool failed = false;
  /// Real-valued neuron target before integerization (SONFIS-AR); equals
  /// neuron_count for SONFIS-R.
  double neuron_target = 0.0;

  bool operator==(const IterationRecord&) const = default;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  std::size_t best_index = 0;

  std::size_t size() const { return records.size(); }
  bool all_failed() const {
    return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.failed; });
  }

  /// First occurrence of the minimum rmse_test.
  void update_best() {
    best_index = 0;
    for (std::size_t i = 1; i < records.size(); ++i)
      if (records[i].rmse_test < records[best_index].rmse_test) best_index = i;
  }

  std::vector<std::size_t> neuron_counts() const {
    std::vector<std::size_t> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.neuron_count);
    return out;
  }

  bool operator==(const RunTrace&) const = default;
};

/// Everything one granulation pass needs besides the grid shape and rule count.
struct IterationSettings {
  /// Spec the train/test splits were normalized with; used to report errors
  /// in original decision units.
  NormalizationSpec norm;
  SomConfig som;
  NfisTrainConfig nfis;
};

struct IterationOutcome {
  IterationRecord record;
  std::optional<RuleBase> model;
  std::optional<SomGrid> grid;
  /// Granules the NFIS was trained on (normalized units).
  Dataset granules;
  /// Per-epoch NFIS training RMSE on the granules (normalized units).
  std::vector<double> nfis_trace;
  std::string failure;
};

namespace detail {

inline double denormalized_rmse(const RuleBase& rb, const Dataset& data, const NormalizationSpec& norm,
                                double min_firing) {
  std::vector<double> pred, actual;
  pred.reserve(data.size());
  actual.reserve(data.size());
  for (const auto& r : data.records) {
    pred.push_back(norm.decision.denormalize(infer(rb, r.inputs, min_firing)));
    actual.push_back(norm.decision.denormalize(r.decision));
  }
  return rmse(pred, actual);
}

}  // namespace detail

/// SOM(n1 x n2) -> granules -> rule base(n_rules) -> hybrid training ->
/// test RMSE. Granulation failures yield a record with failed = true and
/// infinite errors rather than an exception.
inline IterationOutcome run_iteration(const Dataset& train, const Dataset& test, std::size_t n1, std::size_t n2,
                                      std::size_t n_rules, std::uint64_t seed, const IterationSettings& settings) {
  if (train.empty() || test.empty()) throw ValidationError("run_iteration: train and test must be non-empty");
  IterationOutcome out;
  auto& rec = out.record;
  rec.n1 = n1;
  rec.n2 = n2;
  rec.neuron_count = n1 * n2;
  rec.neuron_target = static_cast<double>(n1 * n2);
  rec.n_rules = n_rules;
  rec.seed_used = seed;

  SomConfig som_cfg = settings.som;
  som_cfg.seed = derive_seed(seed, 10);
  NfisTrainConfig nfis_cfg = settings.nfis;
  nfis_cfg.seed = derive_seed(seed, 20);

  try {
    out.grid = train_som(train, n1, n2, som_cfg);
    out.granules = extract_granules(*out.grid, train);
    const auto init = init_rulebase(out.granules, n_rules, nfis_cfg.seed);
    auto trained = train_hybrid(init, out.granules, nfis_cfg);
    out.nfis_trace = std::move(trained.rmse_trace);
    rec.rmse_train = detail::denormalized_rmse(trained.rulebase, train, settings.norm, nfis_cfg.min_firing);
    rec.rmse_test = detail::denormalized_rmse(trained.rulebase, test, settings.norm, nfis_cfg.min_firing);
    out.model = std::move(trained.rulebase);
    if (!std::isfinite(rec.rmse_test)) throw GranulationError("non-finite test error");
  } catch (const GranulationError& e) {
    rec.failed = true;
    rec.rmse_train = std::numeric_limits<double>::infinity();
    rec.rmse_test = std::numeric_limits<double>::infinity();
    out.model.reset();
    out.failure = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// SONFIS-R: random structure search

struct SonfisRConfig {
  std::size_t iterations_per_rule = 10;
  std::vector<std::size_t> rule_counts{2, 3, 4};
  std::size_t neuron_min = 4;
  std::size_t neuron_max = 64;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations_per_rule < 1) throw ValidationError("iterations_per_rule must be >= 1");
    if (rule_counts.empty()) throw ValidationError("rule_counts must be non-empty");
    for (auto r : rule_counts)
      if (r < 1) throw ValidationError("rule counts must be >= 1");
    if (!(neuron_min >= 1 && neuron_max >= neuron_min))
      throw ValidationError("neuron range needs max >= min >= 1");
  }
};

/// All (n1, n2) with n1 <= n2 and n1 * n2 in [lo, hi], in lexicographic order.
inline std::vector<std::pair<std::size_t, std::size_t>> grid_shapes(std::size_t lo, std::size_t hi) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (std::size_t n1 = 1; n1 * n1 <= hi; ++n1)
    for (std::size_t n2 = n1; n1 * n2 <= hi; ++n2)
      if (n1 * n2 >= lo) shapes.emplace_back(n1, n2);
  return shapes;
}

struct SonfisRResult {
  RunTrace trace;
  /// Outcome at trace.best_index; its model is empty when every iteration failed.
  IterationOutcome best;
};

/// For each rule count, iterations_per_rule passes over uniformly sampled
/// grid shapes. Iteration t uses seed derive_seed(cfg.seed, t).
inline SonfisRResult run_sonfis_r(const SonfisRConfig& cfg, const Dataset& train, const Dataset& test,
                                  const IterationSettings& settings) {
  cfg.validate();
  const auto shapes = grid_shapes(cfg.neuron_min, cfg.neuron_max);
  if (shapes.empty()) throw ValidationError("neuron range admits no grid shape");

  SonfisRResult res;
  std::size_t t = 0;
  for (std::size_t n_rules : cfg.rule_counts) {
    for (std::size_t i = 0; i < cfg.iterations_per_rule; ++i, ++t) {
      const std::uint64_t seed = derive_seed(cfg.seed, t);
      Rng pick(derive_seed(seed, 0));
      const auto [n1, n2] = shapes[pick.index(shapes.size())];
      auto outcome = run_iteration(train, test, n1, n2, n_rules, seed, settings);
      outcome.record.t = t;
      res.trace.records.push_back(outcome.record);
      const bool better = res.trace.records.size() == 1 ||
                          outcome.record.rmse_test < res.trace.records[res.trace.best_index].rmse_test;
      if (better) {
        res.trace.best_index = res.trace.records.size() - 1;
        res.best = std::move(outcome);
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// SONFIS-AR: regular neuron growth

struct SonfisArConfig {
  double alpha = 1.01;
  double beta = 1e-4;
  double gamma = 0.5;
  std::size_t n_rules = 2;
  double n0 = 4.0;
  std::size_t max_iterations = 50;
  double neuron_cap = 200.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
      throw ValidationError("alpha, beta and gamma must be finite");
    if (n_rules < 1) throw ValidationError("n_rules must be >= 1");
    if (!(n0 >= 1.0)) throw ValidationError("n0 must be >= 1");
    if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
    if (!(neuron_cap >= n0)) throw ValidationError("neuron_cap must be >= n0");
  }
};

struct SonfisArResult {
  RunTrace trace;
  /// Best successful outcome (minimum test RMSE); empty when all failed.
  std::optional<IterationOutcome> best;
};

/// Iterates the growth law on the real-valued neuron count, building each
/// SOM from factor_grid(N_t). Failed iterations reuse the previous E_t (0 if
/// none yet). Stops early once N_{t+1} has hit the cap three times running.
inline SonfisArResult run_sonfis_ar(const SonfisArConfig& cfg, const Dataset& train, const Dataset& test,
                                    const IterationSettings& settings) {
  cfg.validate();
  SonfisArResult res;
  double n_t = cfg.n0;
  double last_error = 0.0;
  std::size_t capped_run = 0;
  for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
    const auto [n1, n2] = factor_grid(n_t);
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    auto outcome = run_iteration(train, test, n1, n2, cfg.n_rules, seed, settings);
    outcome.record.t = t;
    outcome.record.neuron_target = n_t;
    res.trace.records.push_back(outcome.record);

    if (!outcome.record.failed) {
      last_error = outcome.record.rmse_test;
      if (!res.best || outcome.record.rmse_test < res.best->record.rmse_test) res.best = std::move(outcome);
    }

    const double next = next_neuron_count(n_t, last_error, cfg.alpha, cfg.beta, cfg.gamma);
    n_t = std::clamp(next, 1.0, cfg.neuron_cap);
    capped_run = next >= cfg.neuron_cap ? capped_run + 1 : 0;
    if (capped_run >= 3) break;
  }
  res.trace.update_best();
  return res;
}

// ---------------------------------------------------------------------------
// Balance detection

struct BalanceRegion {
  std::size_t start = 0;
  std::size_t end = 0;  ///< inclusive
  double mean = 0.0;

  bool operator==(const BalanceRegion&) const = default;
};

struct BalanceReport {
  std::optional<BalanceRegion> region;
  /// Run-length encoding of the neuron-count sequence: (count, run length).
  std::vector<std::pair<std::size_t, std::size_t>> durability;
};

namespace detail {

inline bool within_tolerance(std::span<const std::size_t> counts, double tol, double& mean) {
  double s = 0.0;
  for (auto c : counts) s += static_cast<double>(c);
  mean = s / static_cast<double>(counts.size());
  for (auto c : counts)
    if (std::abs(static_cast<double>(c) - mean) > tol) return false;
  return true;
}

}  // namespace detail

/// Earliest run of at least `window` consecutive iterations whose counts all
/// lie within +-tol of the run's mean, extended while that still holds.
inline BalanceReport detect_balance(std::span<const std::size_t> counts, std::size_t window, std::size_t tol) {
  if (window < 1) throw ValidationError("balance window must be >= 1");
  if (counts.size() < window)
    throw ValidationError("trace of length " + std::to_string(counts.size()) + " is shorter than window " +
                          std::to_string(window));
  BalanceReport rep;
  for (std::size_t i = 0; i < counts.size();) {
    std::size_t j = i;
    while (j < counts.size() && counts[j] == counts[i]) ++j;
    rep.durability.emplace_back(counts[i], j - i);
    i = j;
  }

  const auto tolerance = static_cast<double>(tol);
  for (std::size_t start = 0; start + window <= counts.size(); ++start) {
    double mean = 0.0;
    if (!detail::within_tolerance(counts.subspan(start, window), tolerance, mean)) continue;
    std::size_t end = start + window - 1;
    while (end + 1 < counts.size()) {
      double extended = 0.0;
      if (!detail::within_tolerance(counts.subspan(start, end + 2 - start), tolerance, extended)) break;
      ++end;
      mean = extended;
    }
    rep.region = BalanceRegion{start, end, mean};
    break;
  }
  return rep;
}

inline BalanceReport detect_balance(const RunTrace& trace, std::size_t window, std::size_t tol) {
  const auto counts = trace.neuron_counts();
  return detect_balance(std::span<const std::size_t>(counts), window, tol);
}

// ---------------------------------------------------------------------------
// Export

inline void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "t,n1,n2,neuron_count,n_rules,rmse_train,rmse_test,seed_used,failed\n";
  for (const auto& r : trace.records) {
    out << r.t << ',' << r.n1 << ',' << r.n2 << ',' << r.neuron_count << ',' << r.n_rules << ','
        << format_exact(r.rmse_train) << ',' << format_exact(r.rmse_test) << ',' << r.seed_used << ','
        << (r.failed ? 1 : 0) << '\n';
  }
}

}  // namespace sonfis
