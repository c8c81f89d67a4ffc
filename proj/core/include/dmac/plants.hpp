#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmac {

/// x' = f(t, x, u) with u held constant by the caller.
using RhsFunction =
    std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;

/// A continuous-time benchmark plant. `measured_selector` (S) maps the full
/// state x to the measured state xi = S x; `output_selector` (C) maps xi to
/// the tracked output y = C xi.
struct PlantModel {
  std::string name;
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  RhsFunction rhs;
  Eigen::MatrixXd measured_selector;
  Eigen::MatrixXd output_selector;
  std::map<std::string, double> params;
  // Largest integration step the explicit scheme tolerates (infinite for
  // the ODE plants; diffusion-limited for Burgers).
  double max_stable_step = std::numeric_limits<double>::infinity();

  Eigen::Index measured_dim() const { return measured_selector.rows(); }
  Eigen::Index output_dim() const { return output_selector.rows(); }
};

struct ContinuousLinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

// Mass-spring-damper: m q'' + c q' + k q = u, x = [q, q'].
struct MckParams {
  double m = 1.0;
  double c = 0.5;
  double k = 2.0;
};
Eigen::VectorXd mck_rhs(const Eigen::VectorXd& x, double u, const MckParams& p);
ContinuousLinearModel mck_linear(const MckParams& p);
double mck_energy(const Eigen::VectorXd& x, const MckParams& p);
PlantModel make_mck_plant(const MckParams& p);

// Three equal masses in series between two walls, force on mass 1,
// x = [q1, q2, q3, q1', q2', q3'], xi = [q1, q3, q1'], y = q3.
struct ThreeMassParams {
  double m = 1.0;
  double k = 2.0;
};
Eigen::VectorXd three_mass_rhs(const Eigen::VectorXd& x, double u, const ThreeMassParams& p);
ContinuousLinearModel three_mass_linear(const ThreeMassParams& p);
double three_mass_energy(const Eigen::VectorXd& x, const ThreeMassParams& p);
PlantModel make_three_mass_plant(const ThreeMassParams& p);

// Van der Pol: q'' - mu (1 - q^2) q' + q = u, x = [q, q'].
struct VanDerPolParams {
  double mu = 1.0;
};
Eigen::VectorXd vdp_rhs(const Eigen::VectorXd& x, double u, const VanDerPolParams& p);
PlantModel make_van_der_pol_plant(const VanDerPolParams& p);

// Viscous Burgers equation on N periodic nodes with central differences,
// dx = 2 pi / (N - 1). Node numbers are 1-based.
struct BurgersParams {
  int nodes = 100;
  double viscosity = 0.1;
  int actuator_node = 55;
  std::vector<int> sensor_nodes{1, 16, 31, 46, 61, 76, 91};
  int output_node = 61;

  double grid_spacing() const;
  void validate() const;
};
Eigen::VectorXd burgers_rhs(const Eigen::VectorXd& w, double u, const BurgersParams& p);
PlantModel make_burgers_plant(const BurgersParams& p);

/// Classical RK4 over [0, sample_time] in `substeps` equal steps with u held.
/// Throws DivergenceError (carrying the substep index) on a non-finite state.
Eigen::VectorXd rk4_propagate(const RhsFunction& rhs, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u_held, double sample_time, int substeps,
                              double t0 = 0.0);

/// Exact zero-order-hold discretization:
///   exp([A B; 0 0] T) = [A_d B_d; 0 I].
struct DiscreteLinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};
DiscreteLinearModel zoh_discretize_exact(const Eigen::MatrixXd& A_c, const Eigen::MatrixXd& B_c,
                                         double sample_time);

/// Row-selection matrix picking the given 0-based indices out of `dim`.
Eigen::MatrixXd selector_matrix(const std::vector<Eigen::Index>& indices, Eigen::Index dim);

}  // namespace dmac
