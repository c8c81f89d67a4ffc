#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dmac/controller.hpp"
#include "dmac/plants.hpp"

namespace dmac {

using PlantSpec = std::variant<MckParams, ThreeMassParams, VanDerPolParams, BurgersParams>;

std::string plant_kind(const PlantSpec& plant);
PlantModel build_plant(const PlantSpec& plant);

/// Piecewise-constant reference r(t); segment i holds from its start time
/// until the next segment starts.
class ReferenceSchedule {
 public:
  struct Segment {
    double start = 0.0;
    Eigen::VectorXd value;
  };

  ReferenceSchedule() = default;
  explicit ReferenceSchedule(std::vector<Segment> segments);
  static ReferenceSchedule constant(double value, Eigen::Index dim = 1);

  const Eigen::VectorXd& at(double t) const;
  const std::vector<Segment>& segments() const { return segments_; }
  Eigen::Index dim() const { return segments_.empty() ? 0 : segments_.front().value.size(); }

 private:
  std::vector<Segment> segments_;
};

/// Scalar DMAC hyperparameters; matrices are these scales times identity.
struct DmacSettings {
  double forgetting = 0.995;            // lambda
  double regularization_scale = 100.0;  // R_Theta = scale * I
  double state_weight_scale = 1.0;      // R_1 = scale * I
  double input_weight_scale = 1.0;      // R_2 = scale * I
  double exploration_std = 1e-2;        // sigma_v
  int warmup_steps = 10;
  int gain_update_interval = 1;
};

struct ExperimentSpec {
  std::string name = "experiment";
  PlantSpec plant = MckParams{};
  double sample_time = 0.1;
  double duration = 30.0;
  ReferenceSchedule reference = ReferenceSchedule::constant(1.0);
  DmacSettings dmac;
  int substeps = 20;
  std::uint64_t seed = 1;
  // Full plant state at t = 0; standard normal draws from the seed when unset.
  std::optional<Eigen::VectorXd> initial_state;
  // |x|_inf above this ends the run as diverged.
  double divergence_bound = 1e10;
  // Final-window mean |z| below this counts as converged; 5 sigma_v when unset.
  std::optional<double> convergence_threshold;

  std::size_t step_count() const;
  double resolved_convergence_threshold() const;
};

/// Throws ConfigError when the experiment cannot be run as configured.
void validate(const ExperimentSpec& spec);

ControllerConfig make_controller_config(const PlantModel& plant, const DmacSettings& settings,
                                        std::uint64_t noise_seed);

/// Sets a numeric parameter by its configuration key (lambda, r_theta, r1,
/// r2, sigma_v, warmup, gain_interval, substeps, seed, sample_time, duration,
/// reference, and the plant's physical parameters).
void set_parameter(ExperimentSpec& spec, const std::string& key, double value);

/// Keys accepted by set_parameter for this plant.
std::vector<std::string> numeric_keys(const PlantSpec& plant);

struct RunRecord {
  std::size_t k = 0;
  double t = 0.0;
  Eigen::VectorXd y;
  Eigen::VectorXd r;
  Eigen::VectorXd z;  // y - r
  Eigen::VectorXd u;
  Eigen::VectorXd xi;
  Eigen::VectorXd theta;  // column-major vec(Theta_k)
  double spectral_radius = 0.0;
  SynthesisStatus status = SynthesisStatus::Warmup;
};

struct RunLog {
  std::string experiment;
  std::vector<RunRecord> records;
  bool diverged = false;
  std::optional<std::size_t> divergence_step;
  // Largest pre-symmetrization relative asymmetry of P_k over the run.
  double max_covariance_asymmetry = 0.0;
  double final_covariance_condition = 0.0;
};

struct RunSummary {
  std::size_t records = 0;
  double final_mean_abs_error = 0.0;  // mean |z| over the last 10% of steps
  double max_abs_input = 0.0;
  std::optional<std::size_t> settle_step;  // first k with |z_j| < threshold for all j >= k
  double threshold = 0.0;
  bool diverged = false;
  bool converged = false;
};

/// Closed loop: sample xi_k = S x(kT), run the controller, hold u_k over
/// [kT, (k+1)T) and integrate the plant with RK4.
RunLog run_experiment(const ExperimentSpec& spec);

RunSummary summarize(const RunLog& log, double threshold, double window_fraction = 0.1);

enum class SeedPolicy { Fixed, PerValue };

struct SweepSpec {
  ExperimentSpec base;
  std::string axis;
  std::vector<double> values;
  SeedPolicy seed_policy = SeedPolicy::Fixed;

  void validate() const;
};

struct SweepCell {
  double value = 0.0;
  ExperimentSpec spec;
  RunLog log;
  RunSummary summary;
};

/// Experiment specs for every cell of the sweep, in value order.
std::vector<ExperimentSpec> expand_sweep(const SweepSpec& sweep);

/// Runs every cell; up to `jobs` cells execute concurrently.
std::vector<SweepCell> run_sweep(const SweepSpec& sweep, unsigned jobs = 1);

}  // namespace dmac
