#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "dmac/estimator.hpp"
#include "dmac/gain_synthesis.hpp"

namespace dmac {

/// Seeded Gaussian source for the exploration signal v_k.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed = 0) : engine_(seed) {}

  double draw() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// v ~ N(0, std^2 I). `std_dev` is a standard deviation, not a variance.
Eigen::VectorXd exploration_noise(NoiseSource& source, double std_dev, Eigen::Index input_dim);

/// q_{k+1} = q_k + (r_k - y_k).
Eigen::VectorXd integrator_advance(const Eigen::VectorXd& q, const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& y);

/// True when every row holds exactly one 1 and zeros elsewhere.
bool is_selector(const Eigen::MatrixXd& m);

struct ControllerConfig {
  EstimatorConfig estimator;
  LqrWeights weights;
  Eigen::MatrixXd output_selector;  // C, l_y x l_xi
  bool require_selector = true;     // reject a general C when set
  double exploration_std = 1e-2;
  std::uint64_t noise_seed = 0;
  int warmup_steps = 10;
  int gain_update_interval = 1;  // recompute gains every n-th step after warm-up
  DareOptions dare;

  Eigen::Index state_dim() const { return estimator.state_dim; }
  Eigen::Index input_dim() const { return estimator.input_dim; }
  Eigen::Index output_dim() const { return output_selector.rows(); }

  void validate() const;
};

enum class SynthesisStatus {
  Warmup,    // gains forced to zero
  Updated,   // fresh gains from the latest Theta
  Held,      // between cadence ticks, previous gains kept
  Retained,  // synthesis failed, previous gains kept
  Failed,    // synthesis failed and no previous gains exist (zero gains)
};

const char* to_string(SynthesisStatus status);
std::optional<SynthesisStatus> parse_synthesis_status(const std::string& text);

struct ControllerState {
  EstimatorState estimator;
  std::optional<GainPair> gains;
  Eigen::VectorXd integrator;  // q_k
  std::optional<Regressor> prev_phi;
  NoiseSource noise;
  std::uint64_t step_index = 0;
};

/// Everything computed in one controller step, in evaluation order.
struct ControlStep {
  bool estimator_updated = false;
  SynthesisStatus status = SynthesisStatus::Warmup;
  double spectral_radius = std::numeric_limits<double>::quiet_NaN();  // NaN without gains
  Eigen::VectorXd y;
  Eigen::VectorXd error;       // e_k = r_k - y_k
  Eigen::VectorXd integrator;  // q_k used in u_k
  Eigen::VectorXd noise;       // v_k
  Eigen::VectorXd u;
};

ControllerState initial_controller_state(const ControllerConfig& config);

/// One identify -> synthesize -> actuate cycle:
///  1. update the estimator with (phi_{k-1}, xi_k) when phi_{k-1} exists,
///  2. refresh (K_xi, K_q) from Theta_k (or keep / zero them),
///  3. y_k = C xi_k, e_k = r_k - y_k,
///  4. u_k = K_xi xi_k + K_q q_k + v_k,
///  5. q_{k+1} = q_k + e_k,
///  6. phi_k = [xi_k; u_k].
ControlStep controller_step(const ControllerConfig& config, ControllerState& state,
                            const Eigen::VectorXd& xi, const Eigen::VectorXd& reference);

/// Value-type wrapper bundling a configuration with its running state.
class Controller {
 public:
  explicit Controller(ControllerConfig config);

  ControlStep step(const Eigen::VectorXd& xi, const Eigen::VectorXd& reference) {
    return controller_step(config_, state_, xi, reference);
  }

  const ControllerConfig& config() const { return config_; }
  const ControllerState& state() const { return state_; }

 private:
  ControllerConfig config_;
  ControllerState state_;
};

}  // namespace dmac
