#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sonfis/controller.hpp"
#include "sonfis/dataset.hpp"
#include "sonfis/error.hpp"
#include "sonfis/kv_config.hpp"
#include "sonfis/model_io.hpp"
#include "sonfis/nfis.hpp"
#include "sonfis/plitt.hpp"
#include "sonfis/svg_plot.hpp"

// Pipeline commands behind the `sonfis` executable. Each returns a process
// exit status: 0 success, 1 I/O failure, 2 invalid input or configuration,
// 3 every iteration of a run failed.

namespace sonfis::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kIoFailure = 1, kInvalid = 2, kAllFailed = 3 };

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  bool quiet = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

namespace detail {

namespace fs = std::filesystem;

inline KeyValueConfig load_config(const std::optional<fs::path>& path) {
  return path ? KeyValueConfig::load(*path) : KeyValueConfig{};
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

template <typename Fn>
int guarded(const CommandOptions& opts, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    *opts.err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    *opts.err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::exception& e) {
    *opts.err << "error: " << e.what() << '\n';
    return kIoFailure;
  }
}

inline std::uint64_t resolve_seed(const KeyValueConfig& kv, const CommandOptions& opts) {
  return opts.seed ? *opts.seed : kv.get_uint("seed", 0);
}

// -- generator config -------------------------------------------------------

inline const std::set<std::string> kGenKeys = {
    "seed",       "pressures",       "solids",     "sizes",       "geometry.dc", "geometry.di",
    "geometry.do", "geometry.du",    "geometry.h", "geometry.rho_s", "geometry.rho_l", "psd.d63",
    "psd.n",      "sharpness_m",     "rf",         "noise_sd",    "target_records"};

inline plitt::GeneratorConfig parse_generator(const KeyValueConfig& kv, std::uint64_t seed) {
  kv.check_known(kGenKeys);
  plitt::GeneratorConfig g;
  g.seed = seed;
  g.pressures = kv.get_reals("pressures", g.pressures);
  g.solids = kv.get_reals("solids", g.solids);
  g.sizes = kv.get_reals("sizes", g.sizes);
  g.geometry.dc = kv.get_real("geometry.dc", g.geometry.dc);
  g.geometry.di = kv.get_real("geometry.di", g.geometry.di);
  g.geometry.do_ = kv.get_real("geometry.do", g.geometry.do_);
  g.geometry.du = kv.get_real("geometry.du", g.geometry.du);
  g.geometry.h = kv.get_real("geometry.h", g.geometry.h);
  g.geometry.rho_s = kv.get_real("geometry.rho_s", g.geometry.rho_s);
  g.geometry.rho_l = kv.get_real("geometry.rho_l", g.geometry.rho_l);
  g.psd.d63 = kv.get_real("psd.d63", g.psd.d63);
  g.psd.spread_n = kv.get_real("psd.n", g.psd.spread_n);
  g.sharpness_m = kv.get_real("sharpness_m", g.sharpness_m);
  g.rf = kv.get_real("rf", g.rf);
  g.noise_sd = kv.get_real("noise_sd", g.noise_sd);
  g.target_records = kv.get_uint("target_records", g.target_records);
  g.validate();
  return g;
}

inline KeyValueConfig resolved_generator(const plitt::GeneratorConfig& g) {
  KeyValueConfig kv;
  kv.set("seed", std::to_string(g.seed));
  kv.set("pressures", KeyValueConfig::join(g.pressures));
  kv.set("solids", KeyValueConfig::join(g.solids));
  kv.set("sizes", KeyValueConfig::join(g.sizes));
  kv.set_real("geometry.dc", g.geometry.dc);
  kv.set_real("geometry.di", g.geometry.di);
  kv.set_real("geometry.do", g.geometry.do_);
  kv.set_real("geometry.du", g.geometry.du);
  kv.set_real("geometry.h", g.geometry.h);
  kv.set_real("geometry.rho_s", g.geometry.rho_s);
  kv.set_real("geometry.rho_l", g.geometry.rho_l);
  kv.set_real("psd.d63", g.psd.d63);
  kv.set_real("psd.n", g.psd.spread_n);
  kv.set_real("sharpness_m", g.sharpness_m);
  kv.set_real("rf", g.rf);
  kv.set_real("noise_sd", g.noise_sd);
  kv.set("target_records", std::to_string(g.target_records));
  return kv;
}

// -- shared run config --------------------------------------------------------

inline const std::set<std::string> kRunKeys = {
    "seed",           "n_train",     "n_test",   "som.epochs", "som.lr_start", "som.lr_end",
    "som.radius_start", "som.radius_end", "nfis.epochs", "nfis.lr", "nfis.min_firing"};

struct RunSettings {
  std::uint64_t seed = 0;
  std::size_t n_train = 150;
  std::size_t n_test = 19;
  SomConfig som;
  NfisTrainConfig nfis;
};

inline RunSettings parse_run_settings(const KeyValueConfig& kv, std::uint64_t seed) {
  RunSettings s;
  s.seed = seed;
  s.n_train = kv.get_uint("n_train", s.n_train);
  s.n_test = kv.get_uint("n_test", s.n_test);
  if (s.n_train == 0 || s.n_test == 0) throw ValidationError("n_train and n_test must be positive");
  s.som.epochs = kv.get_uint("som.epochs", s.som.epochs);
  s.som.lr_start = kv.get_real("som.lr_start", s.som.lr_start);
  s.som.lr_end = kv.get_real("som.lr_end", s.som.lr_end);
  if (const auto r = kv.find("som.radius_start"); r && *r != "auto") s.som.radius_start = kv.get_real("som.radius_start", 0.0);
  s.som.radius_end = kv.get_real("som.radius_end", s.som.radius_end);
  s.som.validate(1, 1);
  s.nfis.epochs = kv.get_uint("nfis.epochs", s.nfis.epochs);
  s.nfis.lr = kv.get_real("nfis.lr", s.nfis.lr);
  s.nfis.min_firing = kv.get_real("nfis.min_firing", s.nfis.min_firing);
  s.nfis.validate();
  return s;
}

inline void put_run_settings(KeyValueConfig& kv, const RunSettings& s) {
  kv.set("seed", std::to_string(s.seed));
  kv.set("n_train", std::to_string(s.n_train));
  kv.set("n_test", std::to_string(s.n_test));
  kv.set("som.epochs", std::to_string(s.som.epochs));
  kv.set_real("som.lr_start", s.som.lr_start);
  kv.set_real("som.lr_end", s.som.lr_end);
  kv.set("som.radius_start", s.som.radius_start ? format_exact(*s.som.radius_start) : "auto");
  kv.set_real("som.radius_end", s.som.radius_end);
  kv.set("nfis.epochs", std::to_string(s.nfis.epochs));
  kv.set_real("nfis.lr", s.nfis.lr);
  kv.set_real("nfis.min_firing", s.nfis.min_firing);
}

/// Raw data split and normalized on the training part.
struct PreparedData {
  Dataset raw_train, raw_test, train, test;
  NormalizationSpec norm;
};

inline PreparedData prepare(const Dataset& raw, const RunSettings& s) {
  validate(raw);
  if (raw.empty()) throw ValidationError("data file has no records");
  PreparedData p;
  std::tie(p.raw_train, p.raw_test) = split(raw, s.n_train, s.n_test, derive_seed(s.seed, 0xda7a));
  p.norm = fit_normalization(p.raw_train);
  p.train = p.norm.apply(p.raw_train);
  p.test = p.norm.apply(p.raw_test);
  return p;
}

inline IterationSettings iteration_settings(const RunSettings& s, const NormalizationSpec& norm) {
  return IterationSettings{norm, s.som, s.nfis};
}

inline fs::path resolve_data_path(const std::optional<fs::path>& data, const KeyValueConfig& kv) {
  if (data) return *data;
  if (const auto from_manifest = kv.find("manifest.data")) return *from_manifest;
  throw ValidationError("no data file given (use --data)");
}

inline std::string manifest_text(const std::string& command, const std::map<std::string, std::string>& paths,
                                 const KeyValueConfig& resolved) {
  std::string out = "manifest.command = " + command + "\n";
  out += std::string("manifest.version = ") + kVersion + "\n";
  for (const auto& [k, v] : paths) out += "manifest." + k + " = " + v + "\n";
  return out + resolved.serialize();
}

inline std::string trace_csv(const RunTrace& trace) {
  std::ostringstream os;
  write_trace_csv(trace, os);
  return os.str();
}

/// Artifacts shared by both controllers for their best iteration.
inline void write_best_outputs(const fs::path& dir, const IterationOutcome& best, const PreparedData& data,
                               const Dataset& raw) {
  const Model model{*best.model, data.norm, raw.column_names};
  save_model(model, dir / "model.txt");
  write_text(dir / "rules.txt", extract_rules_text(model.rulebase, data.norm, raw.column_names));
  save_csv(data.norm.invert(best.granules), dir / "granules.csv");
  if (best.grid) {
    std::ostringstream cb;
    write_codebook_csv(*best.grid, raw.column_names, cb);
    write_text(dir / "codebook.csv", cb.str());
  }
}

inline std::string best_report(const IterationOutcome& best, const PreparedData& data) {
  KeyValueConfig rep;
  const auto& r = best.record;
  rep.set("best.t", std::to_string(r.t));
  rep.set("best.n1", std::to_string(r.n1));
  rep.set("best.n2", std::to_string(r.n2));
  rep.set("best.neuron_count", std::to_string(r.neuron_count));
  rep.set("best.n_rules", std::to_string(r.n_rules));
  rep.set("best.granules", std::to_string(best.granules.size()));
  rep.set_real("best.rmse_train", r.rmse_train);
  rep.set_real("best.rmse_test", r.rmse_test);
  const double final_norm = best.nfis_trace.empty() ? 0.0 : best.nfis_trace.back();
  rep.set_real("best.granule_rmse_normalized", final_norm);
  rep.set_real("best.granule_rmse", final_norm * (data.norm.decision.constant() ? 0.0 : data.norm.decision.span()));
  // Constant predictor at the training-set mean decision.
  double mean = 0.0;
  for (const auto& rec : data.raw_train.records) mean += rec.decision;
  mean /= static_cast<double>(data.raw_train.size());
  const auto actual = data.raw_test.decisions();
  const std::vector<double> constant(actual.size(), mean);
  rep.set_real("baseline.rmse_test", rmse(constant, actual));
  rep.set("test.records", std::to_string(data.raw_test.size()));
  rep.set("train.records", std::to_string(data.raw_train.size()));
  return rep.serialize();
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Generates the synthetic hydrocyclone CSV and writes `<output>.manifest`.
inline int cmd_gen_data(const std::optional<std::filesystem::path>& config, const std::filesystem::path& output,
                        const CommandOptions& opts) {
  return detail::guarded(opts, [&] {
    const auto kv = detail::load_config(config);
    const auto gen = detail::parse_generator(kv, detail::resolve_seed(kv, opts));
    const auto ds = plitt::generate_dataset(gen);
    if (output.has_parent_path()) detail::ensure_dir(output.parent_path());
    save_csv(ds, output);
    detail::write_text(output.string() + ".manifest",
                       detail::manifest_text("gen-data", {{"output", output.string()}}, detail::resolved_generator(gen)));
    if (!opts.quiet) *opts.out << "wrote " << ds.size() << " records to " << output.string() << '\n';
    return int{kOk};
  });
}

inline int cmd_run_r(const std::optional<std::filesystem::path>& data, const std::optional<std::filesystem::path>& config,
                     const CommandOptions& opts) {
  return detail::guarded(opts, [&] {
    const auto kv = detail::load_config(config);
    auto allowed = detail::kRunKeys;
    allowed.insert({"iterations_per_rule", "rule_counts", "neuron_min", "neuron_max"});
    kv.check_known(allowed);
    const auto settings = detail::parse_run_settings(kv, detail::resolve_seed(kv, opts));
    SonfisRConfig rcfg;
    rcfg.seed = derive_seed(settings.seed, 0x5);
    rcfg.iterations_per_rule = kv.get_uint("iterations_per_rule", rcfg.iterations_per_rule);
    rcfg.rule_counts = kv.get_uints("rule_counts", rcfg.rule_counts);
    rcfg.neuron_min = kv.get_uint("neuron_min", rcfg.neuron_min);
    rcfg.neuron_max = kv.get_uint("neuron_max", rcfg.neuron_max);
    rcfg.validate();

    const auto data_path = detail::resolve_data_path(data, kv);
    const auto raw = load_csv(data_path);
    const auto prepared = detail::prepare(raw, settings);
    const auto result = run_sonfis_r(rcfg, prepared.train, prepared.test,
                                     detail::iteration_settings(settings, prepared.norm));

    KeyValueConfig resolved;
    detail::put_run_settings(resolved, settings);
    resolved.set("iterations_per_rule", std::to_string(rcfg.iterations_per_rule));
    resolved.set("rule_counts", KeyValueConfig::join(rcfg.rule_counts));
    resolved.set("neuron_min", std::to_string(rcfg.neuron_min));
    resolved.set("neuron_max", std::to_string(rcfg.neuron_max));

    const auto& dir = opts.out_dir;
    detail::ensure_dir(dir);
    detail::write_text(dir / "manifest.txt",
                       detail::manifest_text("run-r", {{"data", data_path.string()}, {"out_dir", dir.string()}}, resolved));
    detail::write_text(dir / "trace.csv", detail::trace_csv(result.trace));

    svg::Plot plot{"SONFIS-R: test RMSE per iteration", "iteration", "test RMSE", {}, false};
    for (std::size_t r : rcfg.rule_counts) {
      svg::Series s{std::to_string(r) + " rules", {}, {}, svg::Style::LineMarkers};
      std::size_t i = 0;
      for (const auto& rec : result.trace.records)
        if (rec.n_rules == r) {
          s.x.push_back(static_cast<double>(++i));
          s.y.push_back(rec.rmse_test);
        }
      plot.series.push_back(std::move(s));
    }
    svg::save(plot, dir / "rmse_vs_iteration.svg");

    if (result.trace.all_failed()) {
      *opts.err << "error: every iteration failed; see trace.csv\n";
      return int{kAllFailed};
    }
    detail::write_best_outputs(dir, result.best, prepared, raw);
    detail::write_text(dir / "report.txt", detail::best_report(result.best, prepared));
    if (!opts.quiet) {
      const auto& b = result.best.record;
      *opts.out << "best of " << result.trace.size() << " iterations: t=" << b.t << " grid " << b.n1 << "x" << b.n2
                << ", " << b.n_rules << " rules, test RMSE " << format_sig(b.rmse_test, 5) << '\n';
    }
    return int{kOk};
  });
}

inline int cmd_run_ar(const std::optional<std::filesystem::path>& data, const std::optional<std::filesystem::path>& config,
                      const CommandOptions& opts) {
  return detail::guarded(opts, [&] {
    const auto kv = detail::load_config(config);
    auto allowed = detail::kRunKeys;
    allowed.insert({"alpha", "beta", "gamma", "n_rules", "n0", "max_iterations", "neuron_cap", "balance.window",
                    "balance.tol"});
    kv.check_known(allowed);
    const auto settings = detail::parse_run_settings(kv, detail::resolve_seed(kv, opts));
    SonfisArConfig acfg;
    acfg.seed = derive_seed(settings.seed, 0xa);
    acfg.alpha = kv.require_real("alpha");
    acfg.beta = kv.require_real("beta");
    acfg.gamma = kv.require_real("gamma");
    acfg.n_rules = kv.get_uint("n_rules", acfg.n_rules);
    acfg.n0 = kv.get_real("n0", acfg.n0);
    acfg.max_iterations = kv.get_uint("max_iterations", acfg.max_iterations);
    acfg.neuron_cap = kv.get_real("neuron_cap", acfg.neuron_cap);
    acfg.validate();
    const auto window = static_cast<std::size_t>(kv.get_uint("balance.window", 10));
    const auto tol = static_cast<std::size_t>(kv.get_uint("balance.tol", 2));
    if (window < 1) throw ValidationError("balance.window must be >= 1");

    const auto data_path = detail::resolve_data_path(data, kv);
    const auto raw = load_csv(data_path);
    const auto prepared = detail::prepare(raw, settings);
    const auto result = run_sonfis_ar(acfg, prepared.train, prepared.test,
                                      detail::iteration_settings(settings, prepared.norm));

    KeyValueConfig resolved;
    detail::put_run_settings(resolved, settings);
    resolved.set_real("alpha", acfg.alpha);
    resolved.set_real("beta", acfg.beta);
    resolved.set_real("gamma", acfg.gamma);
    resolved.set("n_rules", std::to_string(acfg.n_rules));
    resolved.set_real("n0", acfg.n0);
    resolved.set("max_iterations", std::to_string(acfg.max_iterations));
    resolved.set_real("neuron_cap", acfg.neuron_cap);
    resolved.set("balance.window", std::to_string(window));
    resolved.set("balance.tol", std::to_string(tol));

    const auto& dir = opts.out_dir;
    detail::ensure_dir(dir);
    detail::write_text(dir / "manifest.txt",
                       detail::manifest_text("run-ar", {{"data", data_path.string()}, {"out_dir", dir.string()}}, resolved));
    detail::write_text(dir / "trace.csv", detail::trace_csv(result.trace));

    KeyValueConfig bal;
    bal.set("window", std::to_string(window));
    bal.set("tol", std::to_string(tol));
    if (result.trace.size() >= window) {
      const auto rep = detect_balance(result.trace, window, tol);
      bal.set("region.found", rep.region ? "1" : "0");
      if (rep.region) {
        bal.set("region.start", std::to_string(rep.region->start));
        bal.set("region.end", std::to_string(rep.region->end));
        bal.set_real("region.mean", rep.region->mean);
      }
      std::string runs;
      for (const auto& [count, len] : rep.durability)
        runs += (runs.empty() ? "" : ", ") + std::to_string(count) + ":" + std::to_string(len);
      bal.set("durability", runs);
    } else {
      bal.set("region.found", "0");
      bal.set("note", "trace shorter than window");
    }
    detail::write_text(dir / "balance.txt", bal.serialize());

    std::vector<double> it, neurons, errors;
    for (const auto& r : result.trace.records) {
      it.push_back(static_cast<double>(r.t));
      neurons.push_back(static_cast<double>(r.neuron_count));
      errors.push_back(r.rmse_test);
    }
    svg::save({"SONFIS-AR: neuron growth", "iteration", "neurons", {{"neurons", it, neurons, svg::Style::LineMarkers}}},
              dir / "neurons_vs_iteration.svg");
    svg::save({"SONFIS-AR: test RMSE", "iteration", "test RMSE", {{"RMSE", it, errors, svg::Style::LineMarkers}}},
              dir / "rmse_vs_iteration.svg");
    svg::save({"SONFIS-AR: RMSE vs neurons", "neurons", "test RMSE", {{"iterations", neurons, errors, svg::Style::Markers}}},
              dir / "rmse_vs_neurons.svg");

    if (!result.best) {
      *opts.err << "error: every iteration failed; see trace.csv\n";
      return int{kAllFailed};
    }
    detail::write_best_outputs(dir, *result.best, prepared, raw);
    detail::write_text(dir / "report.txt", detail::best_report(*result.best, prepared));
    if (!opts.quiet) {
      const auto& b = result.best->record;
      *opts.out << result.trace.size() << " iterations, final neuron count "
                << result.trace.records.back().neuron_count << "; best t=" << b.t << " test RMSE "
                << format_sig(b.rmse_test, 5) << '\n';
    }
    return int{kOk};
  });
}

/// Prints `record,predicted,actual` rows then `rmse,<value>`, all in original
/// decision units, and writes predicted_vs_actual.svg to the output directory.
inline int cmd_eval(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                    const CommandOptions& opts) {
  return detail::guarded(opts, [&] {
    const auto model = load_model(model_path);
    const auto raw = load_csv(data_path);
    if (raw.column_names != model.column_names) {
      std::string expected;
      for (const auto& n : model.column_names) expected += (expected.empty() ? "" : ",") + n;
      throw ValidationError("data columns do not match the model schema (" + expected + ")");
    }
    if (raw.empty()) throw ValidationError("data file has no records");

    std::vector<double> predicted, actual;
    for (const auto& r : raw.records) {
      const auto x = model.norm.normalize(r);
      predicted.push_back(model.norm.decision.denormalize(infer(model.rulebase, x.inputs)));
      actual.push_back(r.decision);
    }
    const double err = rmse(predicted, actual);
    auto& out = *opts.out;
    out << "record,predicted,actual\n";
    for (std::size_t i = 0; i < predicted.size(); ++i)
      out << i << ',' << format_exact(predicted[i]) << ',' << format_exact(actual[i]) << '\n';
    out << "rmse," << format_exact(err) << '\n';

    detail::ensure_dir(opts.out_dir);
    svg::save({"Predicted vs actual", "actual", "predicted", {{"records", actual, predicted, svg::Style::Markers}}, true},
              opts.out_dir / "predicted_vs_actual.svg");
    return int{kOk};
  });
}

inline int cmd_rules(const std::filesystem::path& model_path, const CommandOptions& opts) {
  return detail::guarded(opts, [&] {
    const auto model = load_model(model_path);
    *opts.out << extract_rules_text(model.rulebase, model.norm, model.column_names);
    return int{kOk};
  });
}

}  // namespace sonfis::cli
