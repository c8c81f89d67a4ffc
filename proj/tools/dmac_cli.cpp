// dmac: run closed-loop DMAC experiments and parameter sweeps.
//
//   dmac list-presets
//   dmac validate --preset burgers --set sensors=1,16,31
//   dmac run --preset mck --set seed=7 --out results/
//   dmac sweep --config sweep.cfg --jobs 4
//   dmac sweep --preset mck --axis lambda --values 0.9,0.99,1

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dmac/config.hpp"
#include "dmac/errors.hpp"
#include "dmac/harness.hpp"
#include "dmac/run_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitNotConverged = 3;

struct CommonOptions {
  std::string preset;
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

struct OutputOptions {
  std::string out;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  auto* p = cmd->add_option("--preset", o.preset, "Built-in experiment (see list-presets)");
  auto* c = cmd->add_option("--config", o.config, "Configuration file")->check(CLI::ExistingFile);
  p->excludes(c);
  cmd->add_option("--set", o.sets, "Override a key, e.g. --set lambda=0.99 (repeatable)");
  cmd->add_option("--seed", o.seed, "Random seed (overrides the configured seed)");
}

dmac::ConfigDocument load(const CommonOptions& o) {
  dmac::ConfigDocument doc;
  if (!o.config.empty()) {
    doc = dmac::load_config(o.config);
  } else if (!o.preset.empty()) {
    doc.spec = dmac::preset(o.preset);
  } else {
    throw dmac::ConfigError("one of --preset or --config is required");
  }
  for (const auto& s : o.sets) dmac::apply_override(doc, s);
  if (o.seed) dmac::apply_override(doc, fmt::format("seed={}", *o.seed));
  return doc;
}

fs::path output_dir(const OutputOptions& o) {
  fs::path dir;
  if (!o.out.empty()) {
    dir = o.out;
  } else if (const char* env = std::getenv("DMAC_OUT_DIR"); env && *env) {
    dir = env;
  } else {
    dir = "dmac_out";
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw dmac::Error(fmt::format("cannot write '{}'", path.string()));
  f << text;
}

void write_run(const fs::path& dir, const std::string& stem, const dmac::ExperimentSpec& spec,
               const dmac::RunLog& log, const dmac::RunSummary& summary) {
  std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
  if (!csv) throw dmac::Error(fmt::format("cannot write '{}.csv'", stem));
  dmac::write_run_csv(csv, log);
  write_text(dir / (stem + ".json"), dmac::summary_json(spec, log, summary) + "\n");
}

std::string settle_text(const dmac::RunSummary& s) {
  return s.settle_step ? std::to_string(*s.settle_step) : std::string("-");
}

std::string verdict(const dmac::RunSummary& s) {
  if (s.diverged) return "diverged";
  return s.converged ? "converged" : "not converged";
}

int exit_code(const dmac::RunSummary& s) {
  if (s.diverged) return kExitDiverged;
  return s.converged ? kExitConverged : kExitNotConverged;
}

int cmd_run(const CommonOptions& common, const OutputOptions& out) {
  const auto doc = load(common);
  dmac::validate(doc.spec);
  const auto dir = output_dir(out);
  const auto log = dmac::run_experiment(doc.spec);
  const auto summary = dmac::summarize(log, doc.spec.resolved_convergence_threshold());
  const auto stem = dmac::run_file_stem(doc.spec.name, "base", "nominal", doc.spec.seed);
  write_run(dir, stem, doc.spec, log, summary);

  fmt::print("{:<14} {:>8} {:>14} {:>12} {:>8}  {}\n", "experiment", "steps", "final |z|",
             "max |u|", "settle", "status");
  fmt::print("{:<14} {:>8} {:>14.4e} {:>12.4e} {:>8}  {}\n", doc.spec.name, summary.records,
             summary.final_mean_abs_error, summary.max_abs_input, settle_text(summary),
             verdict(summary));
  fmt::print("wrote {}\n", (dir / (stem + ".csv")).string());
  return exit_code(summary);
}

int cmd_sweep(const CommonOptions& common, const OutputOptions& out, const std::string& axis,
              const std::vector<double>& values) {
  auto doc = load(common);
  if (!axis.empty() || !values.empty()) {
    if (axis.empty() || values.empty()) {
      throw dmac::ConfigError("--axis and --values must be given together");
    }
    doc.sweep = dmac::SweepSpec{doc.spec, axis, values, dmac::SeedPolicy::Fixed};
  }
  if (!doc.sweep) throw dmac::ConfigError("no sweep defined (sweep.axis / sweep.values or --axis / --values)");
  doc.sweep->base = doc.spec;
  doc.sweep->validate();

  const auto dir = output_dir(out);
  const auto cells = dmac::run_sweep(*doc.sweep, out.jobs);

  fmt::print("{:<14} {:>12} {:>8} {:>14} {:>12} {:>8}  {}\n", doc.sweep->axis, "value", "seed",
             "final |z|", "max |u|", "settle", "status");
  for (const auto& c : cells) {
    const auto value = dmac::format_axis_value(c.value);
    write_run(dir, dmac::run_file_stem(c.spec.name, doc.sweep->axis, value, c.spec.seed), c.spec,
              c.log, c.summary);
    fmt::print("{:<14} {:>12} {:>8} {:>14.4e} {:>12.4e} {:>8}  {}\n", "", value, c.spec.seed,
               c.summary.final_mean_abs_error, c.summary.max_abs_input, settle_text(c.summary),
               verdict(c.summary));
  }
  int code = kExitConverged;
  if (std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.summary.diverged; })) {
    code = kExitDiverged;
  } else if (std::any_of(cells.begin(), cells.end(),
                         [](const auto& c) { return !c.summary.converged; })) {
    code = kExitNotConverged;
  }

  const auto summary_path = dir / fmt::format("{}_{}_sweep.csv", doc.spec.name, doc.sweep->axis);
  std::ofstream f(summary_path, std::ios::binary);
  dmac::write_sweep_summary_csv(f, doc.sweep->axis, cells);
  fmt::print("wrote {}\n", summary_path.string());
  return code;
}

int cmd_validate(const CommonOptions& common) {
  const auto doc = load(common);
  dmac::validate(doc.spec);
  if (doc.sweep) {
    auto sweep = *doc.sweep;
    sweep.base = doc.spec;
    sweep.validate();
  }
  const auto plant = dmac::build_plant(doc.spec.plant);
  fmt::print("# plant {}: full state {}, measured {}, inputs {}, outputs {}; {} steps\n",
             plant.name, plant.state_dim, plant.measured_dim(), plant.input_dim,
             plant.output_dim(), doc.spec.step_count());
  fmt::print("{}", dmac::to_config_text(doc));
  return 0;
}

int cmd_list_presets() {
  for (const auto& name : dmac::preset_names()) {
    const auto s = dmac::preset(name);
    fmt::print("{:<12} plant={:<12} Ts={:<5} duration={:<4} lambda={:<7} r_theta={} r1={} r2={}\n",
               name, dmac::plant_kind(s.plant), s.sample_time, s.duration, s.dmac.forgetting,
               s.dmac.regularization_scale, s.dmac.state_weight_scale,
               s.dmac.input_weight_scale);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic mode adaptive control simulator"};
  app.require_subcommand(1);

  CommonOptions common;
  OutputOptions out;
  std::string axis;
  std::vector<double> values;

  auto* run = app.add_subcommand("run", "Run one closed-loop experiment");
  add_common(run, common);
  run->add_option("--out", out.out, "Output directory (default $DMAC_OUT_DIR or ./dmac_out)");

  auto* sweep = app.add_subcommand("sweep", "Vary one parameter over a list of values");
  add_common(sweep, common);
  sweep->add_option("--out", out.out, "Output directory (default $DMAC_OUT_DIR or ./dmac_out)");
  sweep->add_option("--jobs", out.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--axis", axis, "Parameter key to vary");
  sweep->add_option("--values", values, "Comma-separated values")->delimiter(',');

  auto* validate = app.add_subcommand("validate", "Check a configuration without running it");
  add_common(validate, common);

  app.add_subcommand("list-presets", "List the built-in experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(common, out);
    if (*sweep) return cmd_sweep(common, out, axis, values);
    if (*validate) return cmd_validate(common);
    return cmd_list_presets();
  } catch (const dmac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}
