#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sonfis/commands.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"SOM + TSK neuro-fuzzy granulation of hydrocyclone data"};
  app.set_version_flag("--version", sonfis::cli::kVersion);
  app.require_subcommand(1);

  sonfis::cli::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured master seed");
  app.add_option("--out-dir", out_dir, "Directory for run outputs");
  app.add_flag("--quiet", opts.quiet, "Suppress progress messages");

  std::string config, output, data, model;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic hydrocyclone dataset");
  gen->add_option("--config,-c", config, "Generator config (key = value)");
  gen->add_option("--output,-o", output, "Output CSV (default <out-dir>/hydrocyclone.csv)");

  auto* run_r = app.add_subcommand("run-r", "Random structure search (SONFIS-R)");
  run_r->add_option("--data,-d", data, "Input CSV (default: manifest.data from the config)");
  run_r->add_option("--config,-c", config, "Run config (key = value)");

  auto* run_ar = app.add_subcommand("run-ar", "Adaptive neuron growth (SONFIS-AR)");
  run_ar->add_option("--data,-d", data, "Input CSV (default: manifest.data from the config)");
  run_ar->add_option("--config,-c", config, "Run config; alpha, beta and gamma are required")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a CSV");
  eval->add_option("--model,-m", model, "Model file written by run-r/run-ar")->required();
  eval->add_option("--data,-d", data, "CSV with the model's schema")->required();

  auto* rules = app.add_subcommand("rules", "Print the rules of a saved model");
  rules->add_option("--model,-m", model, "Model file")->required();

  for (auto* sub : {gen, run_r, run_ar, eval, rules}) {
    sub->add_option("--seed", seed, "Override the configured master seed");
    sub->add_option("--out-dir", out_dir, "Directory for run outputs");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress messages");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sonfis::cli::kInvalid;
  }

  bool seed_given = seed_opt->count() > 0;
  for (auto* sub : app.get_subcommands()) seed_given = seed_given || sub->get_option("--seed")->count() > 0;
  if (seed_given) opts.seed = seed;
  opts.out_dir = out_dir;

  const auto optional_path = [](const std::string& s) -> std::optional<fs::path> {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
  };

  if (gen->parsed())
    return sonfis::cli::cmd_gen_data(optional_path(config),
                                     output.empty() ? fs::path(out_dir) / "hydrocyclone.csv" : fs::path(output), opts);
  if (run_r->parsed()) return sonfis::cli::cmd_run_r(optional_path(data), optional_path(config), opts);
  if (run_ar->parsed()) return sonfis::cli::cmd_run_ar(optional_path(data), optional_path(config), opts);
  if (eval->parsed()) {
    if (out_dir == ".") opts.out_dir = fs::path(model).parent_path().empty() ? fs::path(".") : fs::path(model).parent_path();
    return sonfis::cli::cmd_eval(model, data, opts);
  }
  return sonfis::cli::cmd_rules(model, opts);
}
