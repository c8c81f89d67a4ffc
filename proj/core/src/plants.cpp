#include "dmac/plants.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "dmac/errors.hpp"

namespace dmac {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_positive_mass(double m, const char* plant) {
  if (!(m > 0.0)) throw ConfigError(fmt::format("{}: mass must be positive, got {}", plant, m));
}

void require_size(const VectorXd& x, Eigen::Index n, const char* plant) {
  if (x.size() != n) {
    throw DimensionError(fmt::format("{}: state has length {}, expected {}", plant, x.size(), n));
  }
}

}  // namespace

MatrixXd selector_matrix(const std::vector<Eigen::Index>& indices, Eigen::Index dim) {
  MatrixXd s = MatrixXd::Zero(static_cast<Eigen::Index>(indices.size()), dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= dim) {
      throw ConfigError(fmt::format("selector index {} outside [0, {})", indices[r], dim));
    }
    s(static_cast<Eigen::Index>(r), indices[r]) = 1.0;
  }
  return s;
}

// ---------------------------------------------------------------- MCK

VectorXd mck_rhs(const VectorXd& x, double u, const MckParams& p) {
  require_positive_mass(p.m, "mck");
  require_size(x, 2, "mck");
  VectorXd dx(2);
  dx << x(1), (u - p.c * x(1) - p.k * x(0)) / p.m;
  return dx;
}

ContinuousLinearModel mck_linear(const MckParams& p) {
  require_positive_mass(p.m, "mck");
  MatrixXd A(2, 2);
  A << 0.0, 1.0, -p.k / p.m, -p.c / p.m;
  MatrixXd B(2, 1);
  B << 0.0, 1.0 / p.m;
  return {A, B};
}

double mck_energy(const VectorXd& x, const MckParams& p) {
  return 0.5 * p.m * x(1) * x(1) + 0.5 * p.k * x(0) * x(0);
}

PlantModel make_mck_plant(const MckParams& p) {
  require_positive_mass(p.m, "mck");
  PlantModel plant;
  plant.name = "mck";
  plant.state_dim = 2;
  plant.input_dim = 1;
  plant.rhs = [p](double, const VectorXd& x, const VectorXd& u) { return mck_rhs(x, u(0), p); };
  plant.measured_selector = MatrixXd::Identity(2, 2);
  plant.output_selector = selector_matrix({0}, 2);
  plant.params = {{"m", p.m}, {"c", p.c}, {"k", p.k}};
  return plant;
}

// ---------------------------------------------------------------- 3-mass

VectorXd three_mass_rhs(const VectorXd& x, double u, const ThreeMassParams& p) {
  require_positive_mass(p.m, "three_mass");
  require_size(x, 6, "three_mass");
  const double q1 = x(0), q2 = x(1), q3 = x(2);
  VectorXd dx(6);
  dx.head<3>() = x.tail<3>();
  dx(3) = (-p.k * q1 + p.k * (q2 - q1) + u) / p.m;
  dx(4) = (-p.k * (q2 - q1) + p.k * (q3 - q2)) / p.m;
  dx(5) = (-p.k * (q3 - q2) - p.k * q3) / p.m;
  return dx;
}

ContinuousLinearModel three_mass_linear(const ThreeMassParams& p) {
  require_positive_mass(p.m, "three_mass");
  const double w = p.k / p.m;
  MatrixXd stiffness(3, 3);
  stiffness << -2 * w, w, 0, w, -2 * w, w, 0, w, -2 * w;
  MatrixXd A = MatrixXd::Zero(6, 6);
  A.topRightCorner(3, 3).setIdentity();
  A.bottomLeftCorner(3, 3) = stiffness;
  MatrixXd B = MatrixXd::Zero(6, 1);
  B(3, 0) = 1.0 / p.m;
  return {A, B};
}

double three_mass_energy(const VectorXd& x, const ThreeMassParams& p) {
  const double q1 = x(0), q2 = x(1), q3 = x(2);
  const double kinetic = 0.5 * p.m * x.tail<3>().squaredNorm();
  const double potential =
      0.5 * p.k * (q1 * q1 + (q2 - q1) * (q2 - q1) + (q3 - q2) * (q3 - q2) + q3 * q3);
  return kinetic + potential;
}

PlantModel make_three_mass_plant(const ThreeMassParams& p) {
  require_positive_mass(p.m, "three_mass");
  PlantModel plant;
  plant.name = "three_mass";
  plant.state_dim = 6;
  plant.input_dim = 1;
  plant.rhs = [p](double, const VectorXd& x, const VectorXd& u) {
    return three_mass_rhs(x, u(0), p);
  };
  plant.measured_selector = selector_matrix({0, 2, 3}, 6);
  plant.output_selector = selector_matrix({1}, 3);
  plant.params = {{"m", p.m}, {"k", p.k}};
  return plant;
}

// ---------------------------------------------------------------- Van der Pol

VectorXd vdp_rhs(const VectorXd& x, double u, const VanDerPolParams& p) {
  require_size(x, 2, "van_der_pol");
  VectorXd dx(2);
  dx << x(1), u + p.mu * (1.0 - x(0) * x(0)) * x(1) - x(0);
  return dx;
}

PlantModel make_van_der_pol_plant(const VanDerPolParams& p) {
  PlantModel plant;
  plant.name = "van_der_pol";
  plant.state_dim = 2;
  plant.input_dim = 1;
  plant.rhs = [p](double, const VectorXd& x, const VectorXd& u) { return vdp_rhs(x, u(0), p); };
  plant.measured_selector = MatrixXd::Identity(2, 2);
  plant.output_selector = selector_matrix({0}, 2);
  plant.params = {{"mu", p.mu}};
  return plant;
}

// ---------------------------------------------------------------- Burgers

double BurgersParams::grid_spacing() const {
  return 2.0 * std::numbers::pi / static_cast<double>(nodes - 1);
}

void BurgersParams::validate() const {
  if (nodes < 3) throw ConfigError(fmt::format("burgers: need at least 3 nodes, got {}", nodes));
  if (!(viscosity >= 0.0)) throw ConfigError("burgers: viscosity must be non-negative");
  auto check_node = [this](int node, const char* what) {
    if (node < 1 || node > nodes) {
      throw ConfigError(fmt::format("burgers: {} node {} outside [1, {}]", what, node, nodes));
    }
  };
  check_node(actuator_node, "actuator");
  check_node(output_node, "output");
  if (sensor_nodes.empty()) throw ConfigError("burgers: at least one sensor node is required");
  for (int s : sensor_nodes) check_node(s, "sensor");
  if (std::find(sensor_nodes.begin(), sensor_nodes.end(), output_node) == sensor_nodes.end()) {
    throw ConfigError(
        fmt::format("burgers: output node {} must be one of the sensor nodes", output_node));
  }
}

VectorXd burgers_rhs(const VectorXd& w, double u, const BurgersParams& p) {
  if (p.nodes < 3) throw ConfigError(fmt::format("burgers: need at least 3 nodes, got {}", p.nodes));
  require_size(w, p.nodes, "burgers");
  const Eigen::Index n = p.nodes;
  const double dx = p.grid_spacing();
  const double conv = 1.0 / (2.0 * dx);
  const double diff = p.viscosity / (dx * dx);
  VectorXd dw(n);
  // Periodic wrap: w_0 = w_N and w_{N+1} = w_1 (1-based).
  for (Eigen::Index i = 0; i < n; ++i) {
    const double left = w(i == 0 ? n - 1 : i - 1);
    const double right = w(i == n - 1 ? 0 : i + 1);
    dw(i) = -w(i) * (right - left) * conv + diff * (right - 2.0 * w(i) + left);
  }
  dw(p.actuator_node - 1) += u;
  return dw;
}

PlantModel make_burgers_plant(const BurgersParams& p) {
  p.validate();
  std::vector<Eigen::Index> sensors;
  for (int s : p.sensor_nodes) sensors.push_back(s - 1);
  const auto out_pos = std::find(p.sensor_nodes.begin(), p.sensor_nodes.end(), p.output_node) -
                       p.sensor_nodes.begin();

  PlantModel plant;
  plant.name = "burgers";
  plant.state_dim = p.nodes;
  plant.input_dim = 1;
  plant.rhs = [p](double, const VectorXd& w, const VectorXd& u) { return burgers_rhs(w, u(0), p); };
  plant.measured_selector = selector_matrix(sensors, p.nodes);
  plant.output_selector =
      selector_matrix({static_cast<Eigen::Index>(out_pos)}, static_cast<Eigen::Index>(sensors.size()));
  plant.params = {{"nu", p.viscosity}, {"nodes", static_cast<double>(p.nodes)}};
  if (p.viscosity > 0.0) {
    const double dx = p.grid_spacing();
    plant.max_stable_step = 0.2 * dx * dx / p.viscosity;
  }
  return plant;
}

// ---------------------------------------------------------------- integration

VectorXd rk4_propagate(const RhsFunction& rhs, const VectorXd& x, const VectorXd& u_held,
                       double sample_time, int substeps, double t0) {
  if (substeps < 1) throw ConfigError("rk4_propagate: substeps must be >= 1");
  if (!(sample_time > 0.0)) throw ConfigError("rk4_propagate: sample time must be positive");
  const double h = sample_time / substeps;
  VectorXd state = x;
  for (int s = 0; s < substeps; ++s) {
    const double t = t0 + s * h;
    const VectorXd k1 = rhs(t, state, u_held);
    const VectorXd k2 = rhs(t + 0.5 * h, state + 0.5 * h * k1, u_held);
    const VectorXd k3 = rhs(t + 0.5 * h, state + 0.5 * h * k2, u_held);
    const VectorXd k4 = rhs(t + h, state + h * k3, u_held);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!state.allFinite()) {
      throw DivergenceError(fmt::format("rk4_propagate: non-finite state at substep {}", s),
                            static_cast<std::size_t>(s));
    }
  }
  return state;
}

DiscreteLinearModel zoh_discretize_exact(const MatrixXd& A_c, const MatrixXd& B_c,
                                         double sample_time) {
  const Eigen::Index n = A_c.rows();
  const Eigen::Index m = B_c.cols();
  if (A_c.cols() != n || B_c.rows() != n) {
    throw DimensionError("zoh_discretize_exact: A must be square and B must match its rows");
  }
  MatrixXd M = MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A_c * sample_time;
  M.topRightCorner(n, m) = B_c * sample_time;
  const MatrixXd phi = M.exp();
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

}  // namespace dmac
