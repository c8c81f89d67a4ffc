#include "dmac/controller.hpp"

#include <fmt/format.h>

#include "dmac/errors.hpp"

namespace dmac {

Eigen::VectorXd exploration_noise(NoiseSource& source, double std_dev, Eigen::Index input_dim) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(input_dim);
  if (std_dev == 0.0) return v;
  for (Eigen::Index i = 0; i < input_dim; ++i) v(i) = std_dev * source.draw();
  return v;
}

Eigen::VectorXd integrator_advance(const Eigen::VectorXd& q, const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& y) {
  if (q.size() != r.size() || r.size() != y.size()) {
    throw DimensionError("integrator_advance: q, r and y must have equal length");
  }
  return q + (r - y);
}

bool is_selector(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) == 1.0) {
        ++ones;
      } else if (m(i, j) != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

void ControllerConfig::validate() const {
  estimator.validate();
  if (estimator.input_dim < 1) throw ConfigError("controller: input dimension must be positive");
  if (output_selector.rows() < 1 || output_selector.cols() != estimator.state_dim) {
    throw ConfigError(fmt::format("controller: output selector must be l_y x {}, got {}x{}",
                                  estimator.state_dim, output_selector.rows(),
                                  output_selector.cols()));
  }
  if (require_selector && !is_selector(output_selector)) {
    throw ConfigError("controller: output selector must have one unit entry per row");
  }
  const Eigen::Index na = estimator.state_dim + output_selector.rows();
  if (weights.state.rows() != na || weights.input.rows() != estimator.input_dim) {
    throw ConfigError(fmt::format("controller: weights must be R_1 {}x{} and R_2 {}x{}", na, na,
                                  estimator.input_dim, estimator.input_dim));
  }
  weights.validate();
  if (!(exploration_std >= 0.0)) throw ConfigError("controller: exploration std must be >= 0");
  if (warmup_steps < 0) throw ConfigError("controller: warm-up steps must be >= 0");
  if (gain_update_interval < 1) throw ConfigError("controller: gain update interval must be >= 1");
}

const char* to_string(SynthesisStatus status) {
  switch (status) {
    case SynthesisStatus::Warmup: return "warmup";
    case SynthesisStatus::Updated: return "updated";
    case SynthesisStatus::Held: return "held";
    case SynthesisStatus::Retained: return "retained";
    case SynthesisStatus::Failed: return "failed";
  }
  return "unknown";
}

std::optional<SynthesisStatus> parse_synthesis_status(const std::string& text) {
  for (auto s : {SynthesisStatus::Warmup, SynthesisStatus::Updated, SynthesisStatus::Held,
                 SynthesisStatus::Retained, SynthesisStatus::Failed}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

ControllerState initial_controller_state(const ControllerConfig& config) {
  config.validate();
  ControllerState state;
  state.estimator = new_estimator(config.estimator);
  state.integrator = Eigen::VectorXd::Zero(config.output_dim());
  state.noise = NoiseSource(config.noise_seed);
  return state;
}

namespace {

std::optional<GainPair> try_synthesis(const ControllerConfig& config, const EstimatorState& est) {
  if (!est.theta.allFinite()) return std::nullopt;
  const auto [A, B] = split_theta(est.theta, config.state_dim(), config.input_dim());
  try {
    return compute_gains(build_augmented(A, B, config.output_selector), config.weights,
                         config.dare);
  } catch (const SynthesisFailure&) {
    return std::nullopt;
  }
}

}  // namespace

ControlStep controller_step(const ControllerConfig& config, ControllerState& state,
                            const Eigen::VectorXd& xi, const Eigen::VectorXd& reference) {
  if (xi.size() != config.state_dim()) {
    throw DimensionError(fmt::format("controller_step: xi has length {}, expected {}", xi.size(),
                                     config.state_dim()));
  }
  if (reference.size() != config.output_dim()) {
    throw DimensionError(fmt::format("controller_step: r has length {}, expected {}",
                                     reference.size(), config.output_dim()));
  }

  ControlStep out;

  // (1) identify
  if (state.prev_phi) {
    state.estimator = rls_update(state.estimator, *state.prev_phi, xi);
    out.estimator_updated = true;
  }

  // (2) synthesize
  const auto k = static_cast<std::int64_t>(state.step_index);
  if (k < config.warmup_steps) {
    out.status = SynthesisStatus::Warmup;
  } else if ((k - config.warmup_steps) % config.gain_update_interval != 0 && state.gains) {
    out.status = SynthesisStatus::Held;
  } else if (auto fresh = try_synthesis(config, state.estimator)) {
    state.gains = std::move(fresh);
    out.status = SynthesisStatus::Updated;
  } else {
    out.status = state.gains ? SynthesisStatus::Retained : SynthesisStatus::Failed;
  }
  const bool use_gains = out.status != SynthesisStatus::Warmup && state.gains.has_value();

  // (3) output and error
  out.y = config.output_selector * xi;
  out.error = reference - out.y;

  // (4) control
  out.integrator = state.integrator;
  out.noise = exploration_noise(state.noise, config.exploration_std, config.input_dim());
  out.u = out.noise;
  if (use_gains) {
    out.u += state.gains->state_gain * xi + state.gains->integral_gain * state.integrator;
    out.spectral_radius = state.gains->spectral_radius;
  }

  // (5) integrate
  state.integrator = integrator_advance(state.integrator, reference, out.y);

  // (6) regressor for the next identification step
  state.prev_phi = Regressor::stack(xi, out.u);
  ++state.step_index;
  return out;
}

Controller::Controller(ControllerConfig config)
    : config_(std::move(config)), state_(initial_controller_state(config_)) {}

}  // namespace dmac
