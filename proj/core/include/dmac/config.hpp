#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmac/harness.hpp"

namespace dmac {

/// A parsed configuration file: one experiment, optionally swept along one axis.
///
/// Format: one `key = value` per line, `#` starts a comment. `preset` and
/// `plant` are applied first regardless of position; every other key is
/// applied in file order. Unknown and repeated keys are rejected.
///
///   preset = mck            # start from a built-in preset
///   plant = burgers         # or choose a plant with its default parameters
///   name = my_run
///   sample_time = 0.01
///   duration = 30
///   reference = 1           # or a schedule: 0:1, 10:-0.5
///   lambda = 0.9995         # and r_theta, r1, r2, sigma_v, warmup, ...
///   sensors = 1, 16, 31     # Burgers only
///   sweep.axis = lambda
///   sweep.values = 0.99, 0.999
///   sweep.seed_policy = fixed   # or per_value
struct ConfigDocument {
  ExperimentSpec spec;
  std::optional<SweepSpec> sweep;
};

ConfigDocument parse_config(const std::string& text, const std::string& origin = "<config>");
ConfigDocument load_config(const std::string& path);

/// Applies `key=value` on top of a parsed document.
void apply_override(ConfigDocument& doc, const std::string& assignment);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ExperimentSpec preset(const std::string& name);

/// Renders a document back into the configuration syntax.
std::string to_config_text(const ConfigDocument& doc);

}  // namespace dmac
