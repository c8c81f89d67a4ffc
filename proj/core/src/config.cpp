#include "dmac/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dmac/errors.hpp"

namespace dmac {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0') {
    throw ConfigError(fmt::format("{}: '{}' is not a number", where, t));
  }
  return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& where) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number(item, where));
  if (out.empty()) throw ConfigError(fmt::format("{}: expected a list of numbers", where));
  return out;
}

PlantSpec plant_from_name(const std::string& name, const std::string& where) {
  if (name == "mck") return MckParams{};
  if (name == "three_mass") return ThreeMassParams{};
  if (name == "van_der_pol") return VanDerPolParams{};
  if (name == "burgers") return BurgersParams{};
  throw ConfigError(fmt::format(
      "{}: unknown plant '{}' (expected mck, three_mass, van_der_pol or burgers)", where, name));
}

// "1" or "0:1, 10:-0.5" (start:value pairs, scalar output).
ReferenceSchedule parse_reference(const std::string& text, const std::string& where) {
  if (text.find(':') == std::string::npos) {
    return ReferenceSchedule::constant(parse_number(text, where));
  }
  std::vector<ReferenceSchedule::Segment> segments;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(fmt::format("{}: schedule entries must be start:value", where));
    }
    Eigen::VectorXd v(1);
    v(0) = parse_number(item.substr(colon + 1), where);
    segments.push_back({parse_number(item.substr(0, colon), where), v});
  }
  return ReferenceSchedule(std::move(segments));
}

struct PendingSweep {
  std::optional<std::string> axis;
  std::optional<std::vector<double>> values;
  SeedPolicy policy = SeedPolicy::Fixed;
  bool touched = false;
};

void apply_key(ExperimentSpec& spec, PendingSweep& sweep, const std::string& key,
               const std::string& value, const std::string& where) {
  if (key == "name") {
    if (value.empty()) throw ConfigError(fmt::format("{}: name must not be empty", where));
    spec.name = value;
  } else if (key == "reference") {
    spec.reference = parse_reference(value, where);
  } else if (key == "sensors") {
    auto* burgers = std::get_if<BurgersParams>(&spec.plant);
    if (!burgers) throw ConfigError(fmt::format("{}: 'sensors' applies to the burgers plant only", where));
    burgers->sensor_nodes.clear();
    for (double v : parse_numbers(value, where)) {
      if (v != static_cast<int>(v)) throw ConfigError(fmt::format("{}: sensor nodes must be integers", where));
      burgers->sensor_nodes.push_back(static_cast<int>(v));
    }
  } else if (key == "initial_state") {
    const auto v = parse_numbers(value, where);
    spec.initial_state = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else if (key == "sweep.axis") {
    sweep.axis = value;
    sweep.touched = true;
  } else if (key == "sweep.values") {
    sweep.values = parse_numbers(value, where);
    sweep.touched = true;
  } else if (key == "sweep.seed_policy") {
    if (value == "fixed") sweep.policy = SeedPolicy::Fixed;
    else if (value == "per_value") sweep.policy = SeedPolicy::PerValue;
    else throw ConfigError(fmt::format("{}: seed_policy must be fixed or per_value", where));
    sweep.touched = true;
  } else {
    const auto keys = numeric_keys(spec.plant);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(fmt::format("{}: unknown key '{}' for plant '{}'", where, key,
                                    plant_kind(spec.plant)));
    }
    try {
      set_parameter(spec, key, parse_number(value, where));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", where, e.what()));
    }
  }
}

void finish_sweep(ConfigDocument& doc, const PendingSweep& pending, const std::string& origin) {
  if (!pending.touched) return;
  if (!pending.axis || !pending.values) {
    throw ConfigError(fmt::format("{}: sweep needs both sweep.axis and sweep.values", origin));
  }
  SweepSpec s;
  s.base = doc.spec;
  s.axis = *pending.axis;
  s.values = *pending.values;
  s.seed_policy = pending.policy;
  doc.sweep = std::move(s);
}

struct Entry {
  int line;
  std::string key;
  std::string value;
};

}  // namespace

std::vector<std::string> preset_names() { return {"mck", "three_mass", "van_der_pol", "burgers"}; }

ExperimentSpec preset(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.reference = ReferenceSchedule::constant(1.0);
  s.dmac.regularization_scale = 100.0;
  s.dmac.exploration_std = 1e-2;
  if (name == "mck") {
    s.plant = MckParams{1.0, 0.5, 2.0};
    s.sample_time = 0.1;
    s.duration = 60.0;
    s.dmac.forgetting = 0.995;
    s.dmac.state_weight_scale = 1.0;
    s.dmac.input_weight_scale = 1.0;
  } else if (name == "three_mass") {
    s.plant = ThreeMassParams{1.0, 2.0};
    s.sample_time = 0.1;
    s.duration = 100.0;
    s.dmac.forgetting = 0.999;
    s.dmac.state_weight_scale = 1.0;
    s.dmac.input_weight_scale = 1.0;
  } else if (name == "van_der_pol") {
    s.plant = VanDerPolParams{1.0};
    s.sample_time = 0.1;
    s.duration = 60.0;
    s.dmac.forgetting = 0.995;
    s.dmac.state_weight_scale = 1.0;
    s.dmac.input_weight_scale = 1.0;
  } else if (name == "burgers") {
    s.plant = BurgersParams{};
    s.sample_time = 0.01;
    s.duration = 30.0;
    s.dmac.forgetting = 0.9995;
    s.dmac.state_weight_scale = 10.0;
    s.dmac.input_weight_scale = 0.1;
  } else {
    throw ConfigError(fmt::format("unknown preset '{}'", name));
  }
  return s;
}

ConfigDocument parse_config(const std::string& text, const std::string& origin) {
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = fmt::format("{}:{}", origin, line_no);
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}: expected 'key = value'", where));
    }
    Entry e{line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    if (e.key.empty()) throw ConfigError(fmt::format("{}: missing key", where));
    if (!seen.insert(e.key).second) {
      throw ConfigError(fmt::format("{}: key '{}' given more than once", where, e.key));
    }
    entries.push_back(std::move(e));
  }

  ConfigDocument doc;
  auto where_of = [&](const Entry& e) { return fmt::format("{}:{}", origin, e.line); };
  for (const auto& e : entries) {
    if (e.key == "preset") {
      try {
        doc.spec = preset(e.value);
      } catch (const ConfigError& err) {
        throw ConfigError(fmt::format("{}: {}", where_of(e), err.what()));
      }
    }
  }
  for (const auto& e : entries) {
    if (e.key == "plant") {
      PlantSpec plant = plant_from_name(e.value, where_of(e));
      if (plant.index() != doc.spec.plant.index()) doc.spec.plant = plant;
    }
  }
  PendingSweep sweep;
  for (const auto& e : entries) {
    if (e.key == "preset" || e.key == "plant") continue;
    apply_key(doc.spec, sweep, e.key, e.value, where_of(e));
  }
  finish_sweep(doc, sweep, origin);
  return doc;
}

ConfigDocument load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void apply_override(ConfigDocument& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const std::string where = fmt::format("--set {}", assignment);
  if (eq == std::string::npos) throw ConfigError(fmt::format("{}: expected key=value", where));
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key == "preset" || key == "plant") {
    throw ConfigError(fmt::format("{}: '{}' cannot be overridden", where, key));
  }

  PendingSweep sweep;
  if (doc.sweep) {
    sweep.axis = doc.sweep->axis;
    sweep.values = doc.sweep->values;
    sweep.policy = doc.sweep->seed_policy;
    sweep.touched = true;
  }
  apply_key(doc.spec, sweep, key, value, where);
  finish_sweep(doc, sweep, where);
}

std::string to_config_text(const ConfigDocument& doc) {
  const auto& s = doc.spec;
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  auto num = [](double v) { return fmt::format("{}", v); };
  auto list = [&num](const auto& values) {
    std::vector<std::string> parts;
    for (auto v : values) parts.push_back(num(static_cast<double>(v)));
    return fmt::format("{}", fmt::join(parts, ", "));
  };

  line("plant", plant_kind(s.plant));
  line("name", s.name);
  line("sample_time", num(s.sample_time));
  line("duration", num(s.duration));
  const auto& segs = s.reference.segments();
  if (segs.size() == 1 && segs.front().start == 0.0) {
    line("reference", num(segs.front().value(0)));
  } else {
    std::vector<std::string> parts;
    for (const auto& seg : segs) parts.push_back(fmt::format("{}:{}", seg.start, seg.value(0)));
    line("reference", fmt::format("{}", fmt::join(parts, ", ")));
  }
  line("lambda", num(s.dmac.forgetting));
  line("r_theta", num(s.dmac.regularization_scale));
  line("r1", num(s.dmac.state_weight_scale));
  line("r2", num(s.dmac.input_weight_scale));
  line("sigma_v", num(s.dmac.exploration_std));
  line("warmup", num(s.dmac.warmup_steps));
  line("gain_interval", num(s.dmac.gain_update_interval));
  line("substeps", num(s.substeps));
  line("seed", fmt::format("{}", s.seed));
  if (s.convergence_threshold) line("converge_tol", num(*s.convergence_threshold));

  if (const auto* p = std::get_if<MckParams>(&s.plant)) {
    line("m", num(p->m));
    line("c", num(p->c));
    line("k", num(p->k));
  } else if (const auto* p = std::get_if<ThreeMassParams>(&s.plant)) {
    line("m", num(p->m));
    line("k", num(p->k));
  } else if (const auto* p = std::get_if<VanDerPolParams>(&s.plant)) {
    line("mu", num(p->mu));
  } else if (const auto* p = std::get_if<BurgersParams>(&s.plant)) {
    line("nu", num(p->viscosity));
    line("nodes", num(p->nodes));
    line("actuator", num(p->actuator_node));
    line("output_node", num(p->output_node));
    line("sensors", list(p->sensor_nodes));
  }
  if (s.initial_state) {
    line("initial_state", list(std::vector<double>(s.initial_state->begin(), s.initial_state->end())));
  }
  if (doc.sweep) {
    line("sweep.axis", doc.sweep->axis);
    line("sweep.values", list(doc.sweep->values));
    line("sweep.seed_policy", doc.sweep->seed_policy == SeedPolicy::Fixed ? "fixed" : "per_value");
  }
  return out;
}

}  // namespace dmac
