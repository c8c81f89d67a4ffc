#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace dmac {

/// Hyperparameters of the matrix recursive least-squares estimator.
///
/// The estimator identifies Theta = [A B] such that xi_{k+1} ~ A xi_k + B u_k
/// by minimizing
///
///   sum_i lambda^{k-i} |xi_i - Theta phi_{i-1}|^2 + lambda^k tr(Theta' R Theta)
///
/// where phi = [xi; u] and R (the regularization) acts on the regressor side.
struct EstimatorConfig {
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  double forgetting = 1.0;
  Eigen::MatrixXd regularization;

  Eigen::Index regressor_dim() const { return state_dim + input_dim; }

  /// Throws ConfigError when dimensions, lambda, or R are invalid.
  void validate() const;
};

struct EstimatorState {
  Eigen::MatrixXd theta;       // l_xi x (l_xi + l_u)
  Eigen::MatrixXd covariance;  // (l_xi + l_u) square, symmetric
  std::uint64_t step_count = 0;
  double forgetting = 1.0;
  // Relative asymmetry |P - P'|_F / |P|_F of the last update, measured
  // before symmetrization.
  double last_asymmetry = 0.0;
};

/// Stacked regressor phi = [xi; u].
class Regressor {
 public:
  Regressor() = default;
  explicit Regressor(Eigen::VectorXd phi) : phi_(std::move(phi)) {}

  static Regressor stack(const Eigen::VectorXd& xi, const Eigen::VectorXd& u);

  const Eigen::VectorXd& vector() const { return phi_; }
  Eigen::Index size() const { return phi_.size(); }

 private:
  Eigen::VectorXd phi_;
};

/// Snapshot matrices: column i of `successors` is the state that followed
/// the regressor [states.col(i); inputs.col(i)].
struct SnapshotBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd successors;

  Eigen::Index size() const { return states.cols(); }
  void validate() const;
};

/// Theta_0 = 0, P_0 = R^{-1}.
EstimatorState new_estimator(const EstimatorConfig& config);

/// One step of the matrix RLS recursion using the aligned pair
/// (phi_{k-1}, xi_k). Returns the updated state; P is symmetrized.
EstimatorState rls_update(const EstimatorState& state, const Regressor& phi_prev,
                          const Eigen::VectorXd& xi_next);

/// Unweighted regularized least-squares fit (lambda = 1).
Eigen::MatrixXd batch_fit(const SnapshotBatch& batch,
                          const Eigen::MatrixXd& regularization);

/// Direct minimizer of the forgetting-factor cost. Sample i (1-based, of k)
/// carries weight lambda^{k-i}; the regularizer carries lambda^k.
Eigen::MatrixXd batch_fit_weighted(const SnapshotBatch& batch, double forgetting,
                                   const Eigen::MatrixXd& regularization);

struct ThetaBlocks {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

ThetaBlocks split_theta(const Eigen::MatrixXd& theta, Eigen::Index state_dim,
                        Eigen::Index input_dim);

/// 2-norm condition number of the covariance (excitation diagnostic).
double covariance_condition(const EstimatorState& state);

}  // namespace dmac
