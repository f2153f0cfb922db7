#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include "sonfis/dataset.hpp"
#include "sonfis/error.hpp"
#include "sonfis/rng.hpp"

// Synthetic hydrocyclone classification data: Plitt cut size, reduced
// efficiency partition curve and a Rosin-Rammler feed.

namespace sonfis::plitt {

/// Lengths in millimetres, densities in g/cm^3.
struct CycloneGeometry {
  double dc = 50.8;
  double di = 15.0;
  double do_ = 30.0;
  double du = 7.0;
  double h = 200.0;
  double rho_s = 2.17;
  double rho_l = 1.0;

  void validate() const {
    if (!(dc > 0 && di > 0 && do_ > 0 && du > 0 && h > 0 && rho_l > 0))
      throw ValidationError("cyclone dimensions and densities must be positive");
    if (!(rho_s > rho_l)) throw ValidationError("solids density must exceed liquid density");
  }
};

struct OperatingPoint {
  double pressure = 10.0;   ///< psi
  double solids_pct = 10.0; ///< feed solids by weight, %

  void validate() const {
    if (!(pressure > 0.0)) throw ValidationError("pressure must be positive");
    if (!(solids_pct >= 0.0 && solids_pct < 100.0)) throw ValidationError("solids percent must be in [0, 100)");
  }
};

struct PartitionCurve {
  double d50 = 1.0;         ///< corrected cut size, um
  double sharpness_m = 2.0;
  double rf = 0.0;          ///< water (bypass) recovery to underflow

  void validate() const {
    if (!(d50 > 0.0) || !(sharpness_m > 0.0)) throw ValidationError("partition curve needs d50 > 0 and m > 0");
    if (!(rf >= 0.0 && rf < 1.0)) throw ValidationError("bypass fraction rf must be in [0, 1)");
  }
};

/// Rosin-Rammler feed: F(d) = 1 - exp(-(d / d63)^n).
struct FeedPsd {
  double d63 = 20.0;
  double spread_n = 0.9;

  double passing(double d) const {
    if (d <= 0.0) return 0.0;
    return -std::expm1(-std::pow(d / d63, spread_n));
  }

  void validate() const {
    if (!(d63 > 0.0 && spread_n > 0.0)) throw ValidationError("feed size distribution needs d63 > 0 and n > 0");
  }
};

/// Flow calibration Q = k sqrt(P) anchored at 60 L/min for 10 psi.
inline constexpr double kFlowAnchorLpm = 60.0;
inline constexpr double kFlowAnchorPsi = 10.0;

inline double flow_rate_lpm(double pressure_psi) {
  return kFlowAnchorLpm / std::sqrt(kFlowAnchorPsi) * std::sqrt(pressure_psi);
}

/// Weight percent solids to volume percent.
inline double solids_volume_pct(double weight_pct, double rho_s, double rho_l) {
  const double vs = weight_pct / rho_s;
  const double vl = (100.0 - weight_pct) / rho_l;
  return 100.0 * vs / (vs + vl);
}

/// Plitt's cut-size correlation in micrometres. The correlation is stated
/// for dimensions in centimetres, so the millimetre geometry is converted.
inline double plitt_d50(const CycloneGeometry& g, const OperatingPoint& op) {
  g.validate();
  op.validate();
  const double cm = 0.1;
  const double phi = solids_volume_pct(op.solids_pct, g.rho_s, g.rho_l);
  const double q = flow_rate_lpm(op.pressure);
  const double num = 50.5 * std::pow(g.dc * cm, 0.46) * std::pow(g.di * cm, 0.6) *
                     std::pow(g.do_ * cm, 1.21) * std::exp(0.063 * phi);
  const double den = std::pow(g.du * cm, 0.71) * std::pow(g.h * cm, 0.38) * std::pow(q, 0.45) *
                     std::sqrt(g.rho_s - g.rho_l);
  return num / den;
}

/// Corrected recovery 1 - exp(-ln2 (d/d50)^m), before bypass.
inline double corrected_recovery(const PartitionCurve& c, double d) {
  if (d <= 0.0) return 0.0;
  return -std::expm1(-std::numbers::ln2 * std::pow(d / c.d50, c.sharpness_m));
}

/// Actual recovery to underflow rf + (1 - rf) Rc(d).
inline double partition_value(const PartitionCurve& c, double d) {
  return c.rf + (1.0 - c.rf) * corrected_recovery(c, d);
}

namespace detail {

inline double bisect_size(const PartitionCurve& c, double target) {
  double lo = 0.0;
  double hi = c.d50;
  while (corrected_recovery(c, hi) < target) hi *= 2.0;
  while ((hi - lo) > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (corrected_recovery(c, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// (d75 - d25) / (2 d50) on the corrected curve.
inline double imperfection(const PartitionCurve& c) {
  c.validate();
  const double d25 = detail::bisect_size(c, 0.25);
  const double d75 = detail::bisect_size(c, 0.75);
  return (d75 - d25) / (2.0 * c.d50);
}

enum class Stream { Overflow = 0, Underflow = 1 };

inline constexpr std::size_t kIntegrationPoints = 2000;
inline constexpr double kIntegrationMinSize = 0.1;

/// Cumulative mass fraction of a stream finer than `d`, for any recovery
/// function r(d) in [0, 1] (fraction of feed mass at size d sent to the
/// stream). Trapezoidal rule on dF over a log grid spanning
/// [0.1, 10 d63] with 2000 points; the mass below the grid and the tail
/// above it are carried as end segments so the fraction reaches exactly 1.
template <typename StreamRecovery>
class StreamIntegrator {
 public:
  StreamIntegrator(const FeedPsd& psd, StreamRecovery recovery) : psd_(psd), recovery_(recovery) {
    psd_.validate();
    const double lo = std::log(kIntegrationMinSize);
    const double hi = std::log(10.0 * psd_.d63);
    sizes_.resize(kIntegrationPoints);
    for (std::size_t i = 0; i < kIntegrationPoints; ++i)
      sizes_[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / (kIntegrationPoints - 1));
    cum_.resize(kIntegrationPoints);
    r_.resize(kIntegrationPoints);
    f_.resize(kIntegrationPoints);
    for (std::size_t i = 0; i < kIntegrationPoints; ++i) {
      r_[i] = recovery_(sizes_[i]);
      f_[i] = psd_.passing(sizes_[i]);
    }
    cum_[0] = f_[0] * 0.5 * (recovery_(0.0) + r_[0]);
    for (std::size_t i = 1; i < kIntegrationPoints; ++i)
      cum_[i] = cum_[i - 1] + (f_[i] - f_[i - 1]) * 0.5 * (r_[i - 1] + r_[i]);
    total_ = mass_below(std::numeric_limits<double>::infinity());
  }

  /// Stream mass (as a fraction of feed mass) finer than d.
  double mass_below(double d) const {
    if (d <= 0.0) return 0.0;
    if (d <= sizes_.front()) return psd_.passing(d) * 0.5 * (recovery_(0.0) + recovery_(d));
    if (d >= sizes_.back()) {
      const double fd = std::isinf(d) ? 1.0 : psd_.passing(d);
      return cum_.back() + (fd - f_.back()) * r_.back();
    }
    const auto it = std::upper_bound(sizes_.begin(), sizes_.end(), d);
    const auto i = static_cast<std::size_t>(it - sizes_.begin()) - 1;
    return cum_[i] + (psd_.passing(d) - f_[i]) * 0.5 * (r_[i] + recovery_(d));
  }

  double total_mass() const { return total_; }

  /// Percent of the stream finer than d.
  double passing_pct(double d) const {
    if (total_ <= 0.0) return 0.0;
    return std::clamp(100.0 * mass_below(d) / total_, 0.0, 100.0);
  }

 private:
  FeedPsd psd_;
  StreamRecovery recovery_;
  std::vector<double> sizes_, r_, f_, cum_;
  double total_ = 0.0;
};

inline auto stream_integrator(const FeedPsd& psd, const PartitionCurve& curve, Stream stream) {
  curve.validate();
  auto rec = [curve, stream](double d) {
    const double r = partition_value(curve, d);
    return stream == Stream::Underflow ? r : 1.0 - r;
  };
  return StreamIntegrator<decltype(rec)>(psd, rec);
}

/// Mass fraction of feed solids reporting to underflow.
inline double underflow_split(const FeedPsd& psd, const PartitionCurve& curve) {
  return stream_integrator(psd, curve, Stream::Underflow).total_mass();
}

/// Cumulative passing percent of one product stream at size d. When
/// `expected_split` is given it must agree with the internally integrated
/// underflow mass fraction to 1e-6.
inline double cumulative_passing(const FeedPsd& psd, const PartitionCurve& curve, Stream stream, double d,
                                 std::optional<double> expected_split = std::nullopt) {
  const auto integ = stream_integrator(psd, curve, stream);
  if (expected_split) {
    const double uf = stream == Stream::Underflow ? integ.total_mass() : 1.0 - integ.total_mass();
    if (std::abs(uf - *expected_split) > 1e-6)
      throw ValidationError("underflow split " + std::to_string(*expected_split) +
                            " is inconsistent with the partition curve (" + std::to_string(uf) + ")");
  }
  return integ.passing_pct(d);
}

struct GeneratorConfig {
  CycloneGeometry geometry;
  std::vector<double> pressures{5.0, 10.0, 15.0};
  std::vector<double> solids{10.0, 20.0, 30.0};
  std::vector<double> sizes{5.0, 8.0, 12.0, 18.0, 25.0, 35.0, 50.0, 70.0, 100.0, 140.0};
  FeedPsd psd;
  double sharpness_m = 2.0;
  double rf = 0.1;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
  /// 0 keeps the full grid; otherwise the grid is trimmed (seeded drop,
  /// canonical order kept) or padded (cyclic repeat measurements with fresh
  /// noise) to exactly this many records.
  std::size_t target_records = 169;

  void validate() const {
    geometry.validate();
    psd.validate();
    if (pressures.empty() || solids.empty() || sizes.empty())
      throw ValidationError("pressures, solids and sizes must all be non-empty");
    for (double p : pressures) OperatingPoint{p, 10.0}.validate();
    for (double s : solids) OperatingPoint{10.0, s}.validate();
    for (double d : sizes)
      if (!(d > 0.0)) throw ValidationError("sizes must be positive");
    PartitionCurve{1.0, sharpness_m, rf}.validate();
    if (!(noise_sd >= 0.0)) throw ValidationError("noise_sd must be >= 0");
  }
};

/// One record per (pressure, solids, size, stream) in pressure-major order;
/// decision = cumulative passing + seeded Gaussian noise, clamped to [0, 100].
inline Dataset generate_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<Record> clean;
  for (double p : cfg.pressures) {
    for (double s : cfg.solids) {
      const PartitionCurve curve{plitt_d50(cfg.geometry, {p, s}), cfg.sharpness_m, cfg.rf};
      const auto over = stream_integrator(cfg.psd, curve, Stream::Overflow);
      const auto under = stream_integrator(cfg.psd, curve, Stream::Underflow);
      for (double d : cfg.sizes) {
        clean.push_back({{p, s, d, 0.0}, over.passing_pct(d)});
        clean.push_back({{p, s, d, 1.0}, under.passing_pct(d)});
      }
    }
  }

  std::vector<std::size_t> picks(clean.size());
  std::iota(picks.begin(), picks.end(), 0);
  if (cfg.target_records > 0 && cfg.target_records < clean.size()) {
    Rng rng(derive_seed(cfg.seed, 1));
    rng.shuffle(picks);
    picks.resize(cfg.target_records);
    std::sort(picks.begin(), picks.end());
  } else if (cfg.target_records > clean.size()) {
    for (std::size_t i = clean.size(); i < cfg.target_records; ++i) picks.push_back(i % clean.size());
  }

  Rng noise(derive_seed(cfg.seed, 2));
  Dataset ds{{}, 4, {kCanonicalColumns.begin(), kCanonicalColumns.end()}};
  ds.records.reserve(picks.size());
  for (std::size_t i : picks) {
    Record r = clean[i];
    if (cfg.noise_sd > 0.0) r.decision += cfg.noise_sd * noise.normal();
    r.decision = std::clamp(r.decision, 0.0, 100.0);
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace sonfis::plitt
