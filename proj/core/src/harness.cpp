#include "dmac/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "dmac/errors.hpp"

namespace dmac {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Two independent streams per run: initial condition and exploration noise.
std::uint64_t derived_seed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

int effective_substeps(const ExperimentSpec& spec, const PlantModel& plant) {
  int n = spec.substeps;
  if (std::isfinite(plant.max_stable_step)) {
    n = std::max(n, static_cast<int>(std::ceil(spec.sample_time / plant.max_stable_step)));
  }
  return n;
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

int as_int(const std::string& key, double value) {
  if (!is_integral(value)) throw ConfigError(fmt::format("{} must be an integer, got {}", key, value));
  return static_cast<int>(value);
}

}  // namespace

std::string plant_kind(const PlantSpec& plant) {
  return std::visit(overloaded{[](const MckParams&) { return std::string("mck"); },
                               [](const ThreeMassParams&) { return std::string("three_mass"); },
                               [](const VanDerPolParams&) { return std::string("van_der_pol"); },
                               [](const BurgersParams&) { return std::string("burgers"); }},
                    plant);
}

PlantModel build_plant(const PlantSpec& plant) {
  return std::visit(overloaded{[](const MckParams& p) { return make_mck_plant(p); },
                               [](const ThreeMassParams& p) { return make_three_mass_plant(p); },
                               [](const VanDerPolParams& p) { return make_van_der_pol_plant(p); },
                               [](const BurgersParams& p) { return make_burgers_plant(p); }},
                    plant);
}

// ---------------------------------------------------------------- reference

ReferenceSchedule::ReferenceSchedule(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw ConfigError("reference schedule needs at least one segment");
  std::stable_sort(segments_.begin(), segments_.end(),
                   [](const Segment& a, const Segment& b) { return a.start < b.start; });
  for (const auto& s : segments_) {
    if (s.value.size() != segments_.front().value.size()) {
      throw ConfigError("reference schedule segments must share one dimension");
    }
  }
}

ReferenceSchedule ReferenceSchedule::constant(double value, Eigen::Index dim) {
  return ReferenceSchedule({Segment{0.0, VectorXd::Constant(dim, value)}});
}

const VectorXd& ReferenceSchedule::at(double t) const {
  const Segment* active = &segments_.front();
  for (const auto& s : segments_) {
    if (s.start <= t + 1e-12) active = &s;
  }
  return active->value;
}

// ---------------------------------------------------------------- spec

std::size_t ExperimentSpec::step_count() const {
  return static_cast<std::size_t>(std::floor(duration / sample_time + 1e-9));
}

double ExperimentSpec::resolved_convergence_threshold() const {
  if (convergence_threshold) return *convergence_threshold;
  return dmac.exploration_std > 0.0 ? 5.0 * dmac.exploration_std : 1e-3;
}

ControllerConfig make_controller_config(const PlantModel& plant, const DmacSettings& s,
                                        std::uint64_t noise_seed) {
  const Eigen::Index nx = plant.measured_dim();
  const Eigen::Index nu = plant.input_dim;
  const Eigen::Index ny = plant.output_dim();
  ControllerConfig c;
  c.estimator.state_dim = nx;
  c.estimator.input_dim = nu;
  c.estimator.forgetting = s.forgetting;
  c.estimator.regularization = s.regularization_scale * MatrixXd::Identity(nx + nu, nx + nu);
  c.weights = LqrWeights::scaled_identity(nx + ny, s.state_weight_scale, nu, s.input_weight_scale);
  c.output_selector = plant.output_selector;
  c.exploration_std = s.exploration_std;
  c.noise_seed = noise_seed;
  c.warmup_steps = s.warmup_steps;
  c.gain_update_interval = s.gain_update_interval;
  return c;
}

void validate(const ExperimentSpec& spec) {
  if (!(spec.sample_time > 0.0)) throw ConfigError("sample_time must be positive");
  if (!(spec.duration >= spec.sample_time)) {
    throw ConfigError("duration must be at least one sample_time");
  }
  if (spec.substeps < 1) throw ConfigError("substeps must be >= 1");
  if (!(spec.divergence_bound > 0.0)) throw ConfigError("divergence bound must be positive");
  const PlantModel plant = build_plant(spec.plant);
  if (spec.reference.dim() != plant.output_dim()) {
    throw ConfigError(fmt::format("reference has dimension {}, plant output has {}",
                                  spec.reference.dim(), plant.output_dim()));
  }
  if (spec.initial_state && spec.initial_state->size() != plant.state_dim) {
    throw ConfigError("initial state does not match plant state dimension");
  }
  make_controller_config(plant, spec.dmac, 0).validate();
}

std::vector<std::string> numeric_keys(const PlantSpec& plant) {
  std::vector<std::string> keys{"lambda",  "r_theta",  "r1",          "r2",       "sigma_v",
                                "warmup",  "gain_interval", "substeps", "seed",    "sample_time",
                                "duration", "reference", "converge_tol"};
  std::visit(overloaded{[&](const MckParams&) { keys.insert(keys.end(), {"m", "c", "k"}); },
                        [&](const ThreeMassParams&) { keys.insert(keys.end(), {"m", "k"}); },
                        [&](const VanDerPolParams&) { keys.push_back("mu"); },
                        [&](const BurgersParams&) {
                          keys.insert(keys.end(), {"nu", "nodes", "actuator", "output_node"});
                        }},
             plant);
  return keys;
}

void set_parameter(ExperimentSpec& spec, const std::string& key, double value) {
  if (!std::isfinite(value)) throw ConfigError(fmt::format("{}: value must be finite", key));
  auto& d = spec.dmac;
  if (key == "lambda") { d.forgetting = value; return; }
  if (key == "r_theta") { d.regularization_scale = value; return; }
  if (key == "r1") { d.state_weight_scale = value; return; }
  if (key == "r2") { d.input_weight_scale = value; return; }
  if (key == "sigma_v") { d.exploration_std = value; return; }
  if (key == "warmup") { d.warmup_steps = as_int(key, value); return; }
  if (key == "gain_interval") { d.gain_update_interval = as_int(key, value); return; }
  if (key == "substeps") { spec.substeps = as_int(key, value); return; }
  if (key == "seed") {
    if (!is_integral(value) || value < 0) throw ConfigError("seed must be a non-negative integer");
    spec.seed = static_cast<std::uint64_t>(value);
    return;
  }
  if (key == "sample_time") { spec.sample_time = value; return; }
  if (key == "duration") { spec.duration = value; return; }
  if (key == "converge_tol") { spec.convergence_threshold = value; return; }
  if (key == "reference") {
    spec.reference = ReferenceSchedule::constant(value, spec.reference.dim() > 0 ? spec.reference.dim() : 1);
    return;
  }

  const bool handled = std::visit(
      overloaded{
          [&](MckParams& p) {
            if (key == "m") p.m = value;
            else if (key == "c") p.c = value;
            else if (key == "k") p.k = value;
            else return false;
            return true;
          },
          [&](ThreeMassParams& p) {
            if (key == "m") p.m = value;
            else if (key == "k") p.k = value;
            else return false;
            return true;
          },
          [&](VanDerPolParams& p) {
            if (key != "mu") return false;
            p.mu = value;
            return true;
          },
          [&](BurgersParams& p) {
            if (key == "nu") p.viscosity = value;
            else if (key == "nodes") p.nodes = as_int(key, value);
            else if (key == "actuator") p.actuator_node = as_int(key, value);
            else if (key == "output_node") p.output_node = as_int(key, value);
            else return false;
            return true;
          }},
      spec.plant);
  if (!handled) {
    throw ConfigError(
        fmt::format("unknown parameter '{}' for plant '{}'", key, plant_kind(spec.plant)));
  }
}

// ---------------------------------------------------------------- run

RunLog run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  const PlantModel plant = build_plant(spec.plant);
  Controller controller(make_controller_config(plant, spec.dmac, derived_seed(spec.seed, 1)));
  const int substeps = effective_substeps(spec, plant);

  VectorXd x;
  if (spec.initial_state) {
    x = *spec.initial_state;
  } else {
    std::mt19937_64 ic_engine(derived_seed(spec.seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    x.resize(plant.state_dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(ic_engine);
  }

  RunLog log;
  log.experiment = spec.name;
  const std::size_t steps = spec.step_count();
  log.records.reserve(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * spec.sample_time;
    const VectorXd xi = plant.measured_selector * x;
    const VectorXd& r = spec.reference.at(t);
    const ControlStep step = controller.step(xi, r);
    const auto& est = controller.state().estimator;
    log.max_covariance_asymmetry = std::max(log.max_covariance_asymmetry, est.last_asymmetry);

    RunRecord rec;
    rec.k = k;
    rec.t = t;
    rec.y = step.y;
    rec.r = r;
    rec.z = step.y - r;
    rec.u = step.u;
    rec.xi = xi;
    rec.theta = est.theta.reshaped();
    rec.spectral_radius = step.spectral_radius;
    rec.status = step.status;
    log.records.push_back(std::move(rec));

    bool failed = !step.u.allFinite();
    if (!failed) {
      try {
        x = rk4_propagate(plant.rhs, x, step.u, spec.sample_time, substeps, t);
        failed = x.lpNorm<Eigen::Infinity>() > spec.divergence_bound;
      } catch (const DivergenceError&) {
        failed = true;
      }
    }
    if (failed) {
      log.diverged = true;
      log.divergence_step = k;
      break;
    }
  }
  log.final_covariance_condition = covariance_condition(controller.state().estimator);
  return log;
}

RunSummary summarize(const RunLog& log, double threshold, double window_fraction) {
  if (log.records.empty()) throw Error("summarize: run log is empty");
  RunSummary s;
  s.records = log.records.size();
  s.threshold = threshold;
  s.diverged = log.diverged;

  const std::size_t n = log.records.size();
  const auto window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(window_fraction * static_cast<double>(n))));
  double sum = 0.0;
  for (std::size_t i = n - window; i < n; ++i) sum += log.records[i].z.norm();
  s.final_mean_abs_error = sum / static_cast<double>(window);

  for (const auto& r : log.records) {
    s.max_abs_input = std::max(s.max_abs_input, r.u.lpNorm<Eigen::Infinity>());
  }

  // Scan backwards for the start of the final run below threshold.
  std::optional<std::size_t> settle;
  for (std::size_t i = n; i-- > 0;) {
    if (!(log.records[i].z.norm() < threshold)) break;
    settle = log.records[i].k;
  }
  s.settle_step = settle;
  s.converged = !s.diverged && s.final_mean_abs_error < threshold;
  return s;
}

// ---------------------------------------------------------------- sweep

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep: at least one value is required");
  const auto keys = numeric_keys(base.plant);
  if (std::find(keys.begin(), keys.end(), axis) == keys.end()) {
    throw ConfigError(fmt::format("sweep: unknown axis '{}' for plant '{}'", axis,
                                  plant_kind(base.plant)));
  }
  for (const auto& s : expand_sweep(*this)) dmac::validate(s);
}

std::vector<ExperimentSpec> expand_sweep(const SweepSpec& sweep) {
  std::vector<ExperimentSpec> specs;
  specs.reserve(sweep.values.size());
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    ExperimentSpec s = sweep.base;
    set_parameter(s, sweep.axis, sweep.values[i]);
    if (sweep.seed_policy == SeedPolicy::PerValue && sweep.axis != "seed") s.seed += i;
    specs.push_back(std::move(s));
  }
  return specs;
}

std::vector<SweepCell> run_sweep(const SweepSpec& sweep, unsigned jobs) {
  sweep.validate();
  const auto specs = expand_sweep(sweep);
  std::vector<SweepCell> cells(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < specs.size();) {
      try {
        cells[i].value = sweep.values[i];
        cells[i].spec = specs[i];
        cells[i].log = run_experiment(specs[i]);
        cells[i].summary =
            summarize(cells[i].log, specs[i].resolved_convergence_threshold());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(specs.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return cells;
}

}  // namespace dmac
