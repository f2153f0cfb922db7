#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "sonfis/dataset.hpp"
#include "sonfis/error.hpp"
#include "sonfis/rng.hpp"

namespace sonfis {

/// Online training schedule. Learning rate and neighbourhood radius decay
/// linearly from their start to end values across epochs.
struct SomConfig {
  std::size_t epochs = 100;
  double lr_start = 0.5;
  double lr_end = 0.01;
  /// Unset means max(n1, n2) / 2 for the grid being trained.
  std::optional<double> radius_start;
  double radius_end = 0.5;
  std::uint64_t seed = 0;

  double resolved_radius_start(std::size_t n1, std::size_t n2) const {
    return radius_start.value_or(std::max(radius_end, static_cast<double>(std::max(n1, n2)) / 2.0));
  }

  void validate(std::size_t n1, std::size_t n2) const {
    if (epochs < 1) throw ValidationError("som.epochs must be >= 1");
    if (!(lr_end > 0.0 && lr_start >= lr_end && lr_start <= 1.0))
      throw ValidationError("som learning rates need 1 >= lr_start >= lr_end > 0");
    if (!(radius_end >= 0.0 && resolved_radius_start(n1, n2) >= radius_end))
      throw ValidationError("som radii need radius_start >= radius_end >= 0");
  }
};

/// Rectangular Kohonen map. Neuron i sits at grid position (i / n2, i % n2);
/// prototypes are stored row-major in a flat codebook.
struct SomGrid {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t dim = 0;
  std::vector<double> codebook;
  std::vector<std::size_t> hit_counts;

  std::size_t size() const { return n1 * n2; }
  std::size_t row(std::size_t i) const { return i / n2; }
  std::size_t col(std::size_t i) const { return i % n2; }

  std::span<const double> prototype(std::size_t i) const {
    return std::span<const double>(codebook).subspan(i * dim, dim);
  }
  std::span<double> prototype(std::size_t i) { return std::span<double>(codebook).subspan(i * dim, dim); }

  bool operator==(const SomGrid&) const = default;
};

/// Inputs followed by the decision: the SOM quantizes both jointly.
inline std::vector<double> joint_vector(const Record& r) {
  std::vector<double> v(r.inputs);
  v.push_back(r.decision);
  return v;
}

/// Factor pair (n1 <= n2) of round(n_target) with the smallest |n1 - n2|.
inline std::pair<std::size_t, std::size_t> factor_grid(double n_target) {
  const double rounded = std::round(n_target);
  const auto n = rounded >= 1.0 ? static_cast<std::size_t>(rounded) : std::size_t{1};
  auto n1 = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (n1 * n1 > n) --n1;
  while ((n1 + 1) * (n1 + 1) <= n) ++n1;
  while (n % n1 != 0) --n1;
  return {n1, n / n1};
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

/// Best-matching unit: nearest prototype, lowest index on ties.
inline std::size_t bmu(const SomGrid& grid, std::span<const double> x) {
  if (x.size() != grid.dim)
    throw ValidationError("bmu: vector has dimension " + std::to_string(x.size()) + ", codebook has " +
                          std::to_string(grid.dim));
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = squared_distance(grid.prototype(i), x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Codebook of uniform noise in [0, 1)^dim, no hits.
inline SomGrid init_som(std::size_t n1, std::size_t n2, std::size_t dim, std::uint64_t seed) {
  if (n1 == 0 || n2 == 0) throw ValidationError("SOM grid dimensions must be positive");
  if (dim == 0) throw ValidationError("SOM prototypes need a positive dimension");
  SomGrid grid{n1, n2, dim, std::vector<double>(n1 * n2 * dim), std::vector<std::size_t>(n1 * n2, 0)};
  Rng rng(seed);
  for (auto& w : grid.codebook) w = rng.uniform();
  return grid;
}

/// Recomputes hit_counts from the BMU of every record.
inline void assign_hits(SomGrid& grid, const Dataset& data) {
  std::fill(grid.hit_counts.begin(), grid.hit_counts.end(), 0);
  for (const auto& r : data.records) ++grid.hit_counts[bmu(grid, joint_vector(r))];
}

/// Mean Euclidean distance from each record to its BMU.
inline double quantization_error(const SomGrid& grid, const Dataset& data) {
  if (data.empty()) throw ValidationError("quantization_error: empty dataset");
  double total = 0.0;
  for (const auto& r : data.records) {
    const auto x = joint_vector(r);
    total += std::sqrt(squared_distance(grid.prototype(bmu(grid, x)), x));
  }
  return total / static_cast<double>(data.size());
}

/// Online competitive training of an existing codebook. The visiting order
/// is reshuffled every epoch from the config seed.
inline void fit_som(SomGrid& grid, const Dataset& train, const SomConfig& cfg) {
  if (train.empty()) throw ValidationError("train_som: empty dataset");
  if (grid.dim != train.n_inputs + 1)
    throw ValidationError("train_som: codebook dimension does not match data");
  cfg.validate(grid.n1, grid.n2);

  std::vector<std::vector<double>> samples;
  samples.reserve(train.size());
  for (const auto& r : train.records) samples.push_back(joint_vector(r));

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 1));

  const double r_start = cfg.resolved_radius_start(grid.n1, grid.n2);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double frac =
        cfg.epochs > 1 ? static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1) : 1.0;
    const double lr = cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac;
    const double radius = r_start + (cfg.radius_end - r_start) * frac;
    rng.shuffle(order);

    for (std::size_t s : order) {
      const auto& x = samples[s];
      const std::size_t win = bmu(grid, x);
      const auto wr = static_cast<double>(grid.row(win));
      const auto wc = static_cast<double>(grid.col(win));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        double h = 0.0;
        if (i == win) {
          h = 1.0;
        } else if (radius > 0.0) {
          const double dr = static_cast<double>(grid.row(i)) - wr;
          const double dc = static_cast<double>(grid.col(i)) - wc;
          const double d2 = dr * dr + dc * dc;
          if (d2 > radius * radius) continue;
          h = std::exp(-d2 / (2.0 * radius * radius));
        } else {
          continue;
        }
        auto w = grid.prototype(i);
        const double step = lr * h;
        for (std::size_t k = 0; k < grid.dim; ++k) w[k] += step * (x[k] - w[k]);
      }
    }
  }
  assign_hits(grid, train);
}

/// Trains an n1 x n2 map on normalized records (inputs and decision jointly).
inline SomGrid train_som(const Dataset& train, std::size_t n1, std::size_t n2, const SomConfig& cfg) {
  if (train.empty()) throw ValidationError("train_som: empty dataset");
  auto grid = init_som(n1, n2, train.n_inputs + 1, derive_seed(cfg.seed, 0));
  fit_som(grid, train, cfg);
  return grid;
}

/// Codebook vectors of occupied neurons, split back into inputs and decision.
inline Dataset extract_granules(const SomGrid& grid, const Dataset& train) {
  if (grid.dim != train.n_inputs + 1)
    throw ValidationError("extract_granules: codebook dimension does not match data");
  Dataset out{{}, train.n_inputs, train.column_names};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.hit_counts[i] == 0) continue;
    const auto w = grid.prototype(i);
    out.records.push_back(Record{{w.begin(), w.end() - 1}, w.back()});
  }
  if (out.empty()) throw GranulationError("no SOM neuron was hit by any training record");
  return out;
}

/// CSV: neuron_row, neuron_col, hit_count, then one column per dimension.
inline void write_codebook_csv(const SomGrid& grid, const std::vector<std::string>& dim_names,
                               std::ostream& out) {
  out << "neuron_row,neuron_col,hit_count";
  for (std::size_t k = 0; k < grid.dim; ++k)
    out << ',' << (k < dim_names.size() ? dim_names[k] : "w" + std::to_string(k));
  out << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << grid.row(i) << ',' << grid.col(i) << ',' << grid.hit_counts[i];
    for (double w : grid.prototype(i)) out << ',' << format_exact(w);
    out << '\n';
  }
}

}  // namespace sonfis
