#include "dmac/estimator.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dmac/errors.hpp"

namespace dmac {

namespace {

constexpr double kPdRelativeTolerance = 1e-12;

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.norm());
  return (m - m.transpose()).norm() <= 1e-12 * scale;
}

}  // namespace

void EstimatorConfig::validate() const {
  if (state_dim <= 0) throw ConfigError("estimator: state dimension must be positive");
  if (input_dim < 0) throw ConfigError("estimator: input dimension must be non-negative");
  if (!(forgetting > 0.0 && forgetting <= 1.0)) {
    throw ConfigError(fmt::format("estimator: forgetting factor {} outside (0, 1]", forgetting));
  }
  const Eigen::Index n = regressor_dim();
  if (regularization.rows() != n || regularization.cols() != n) {
    throw ConfigError(fmt::format("estimator: regularization must be {}x{}, got {}x{}", n, n,
                                  regularization.rows(), regularization.cols()));
  }
  if (!is_symmetric(regularization)) {
    throw ConfigError("estimator: regularization must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(regularization, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(lo > kPdRelativeTolerance * hi)) {
    throw ConfigError(fmt::format(
        "estimator: regularization is not positive definite (eigenvalues in [{}, {}])", lo, hi));
  }
}

Regressor Regressor::stack(const Eigen::VectorXd& xi, const Eigen::VectorXd& u) {
  Eigen::VectorXd phi(xi.size() + u.size());
  phi << xi, u;
  return Regressor(std::move(phi));
}

void SnapshotBatch::validate() const {
  if (inputs.cols() != states.cols() || successors.cols() != states.cols()) {
    throw DimensionError("snapshot batch: column counts of states, inputs and successors differ");
  }
  if (successors.rows() != states.rows()) {
    throw DimensionError("snapshot batch: successors must have as many rows as states");
  }
}

EstimatorState new_estimator(const EstimatorConfig& config) {
  config.validate();
  const Eigen::Index n = config.regressor_dim();
  EstimatorState state;
  state.theta = Eigen::MatrixXd::Zero(config.state_dim, n);
  // R is SPD (validated), so an LLT solve against the identity gives R^{-1}.
  Eigen::MatrixXd p0 = config.regularization.llt().solve(Eigen::MatrixXd::Identity(n, n));
  state.covariance = 0.5 * (p0 + p0.transpose());
  state.forgetting = config.forgetting;
  return state;
}

EstimatorState rls_update(const EstimatorState& state, const Regressor& phi_prev,
                          const Eigen::VectorXd& xi_next) {
  const Eigen::Index n = state.covariance.rows();
  if (phi_prev.size() != n) {
    throw DimensionError(
        fmt::format("rls_update: regressor length {} does not match {}", phi_prev.size(), n));
  }
  if (xi_next.size() != state.theta.rows()) {
    throw DimensionError(fmt::format("rls_update: state length {} does not match {}",
                                     xi_next.size(), state.theta.rows()));
  }

  const double lambda = state.forgetting;
  const Eigen::VectorXd& phi = phi_prev.vector();
  const Eigen::VectorXd p_phi = state.covariance * phi;
  const double gamma = lambda + phi.dot(p_phi);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw NumericalBreakdown(fmt::format("rls_update: gamma = {} is not positive", gamma), gamma);
  }

  EstimatorState next;
  next.forgetting = lambda;
  next.step_count = state.step_count + 1;

  Eigen::MatrixXd p = (state.covariance - p_phi * (p_phi.transpose() / gamma)) / lambda;
  const double p_norm = p.norm();
  next.last_asymmetry = p_norm > 0.0 ? (p - p.transpose()).norm() / p_norm : 0.0;
  next.covariance = 0.5 * (p + p.transpose());

  const Eigen::VectorXd innovation = xi_next - state.theta * phi;
  next.theta = state.theta + innovation * (next.covariance * phi).transpose();
  return next;
}

Eigen::MatrixXd batch_fit(const SnapshotBatch& batch, const Eigen::MatrixXd& regularization) {
  return batch_fit_weighted(batch, 1.0, regularization);
}

Eigen::MatrixXd batch_fit_weighted(const SnapshotBatch& batch, double forgetting,
                                   const Eigen::MatrixXd& regularization) {
  batch.validate();
  const Eigen::Index n = batch.states.rows() + batch.inputs.rows();
  if (regularization.rows() != n || regularization.cols() != n) {
    throw DimensionError("batch_fit: regularization does not match regressor dimension");
  }
  if (!(forgetting > 0.0 && forgetting <= 1.0)) {
    throw ConfigError("batch_fit: forgetting factor outside (0, 1]");
  }

  const Eigen::Index k = batch.size();
  Eigen::MatrixXd regressors(n, k);
  regressors << batch.states, batch.inputs;

  // Weighted gram: X = sum w_i phi_i phi_i' + lambda^k R, Y = sum w_i phi_i xi_i'.
  Eigen::VectorXd weights(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    weights(i) = std::pow(forgetting, static_cast<double>(k - 1 - i));
  }
  const Eigen::MatrixXd weighted = regressors * weights.asDiagonal();
  Eigen::MatrixXd gram = weighted * regressors.transpose() +
                         std::pow(forgetting, static_cast<double>(k)) * regularization;
  gram = 0.5 * (gram + gram.transpose());
  const Eigen::MatrixXd cross = weighted * batch.successors.transpose();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalBreakdown("batch_fit: gram matrix factorization failed", 0.0);
  }
  return ldlt.solve(cross).transpose();
}

ThetaBlocks split_theta(const Eigen::MatrixXd& theta, Eigen::Index state_dim,
                        Eigen::Index input_dim) {
  if (state_dim < 0 || input_dim < 0 || theta.rows() != state_dim ||
      theta.cols() != state_dim + input_dim) {
    throw DimensionError(fmt::format("split_theta: theta is {}x{}, expected {}x{}", theta.rows(),
                                     theta.cols(), state_dim, state_dim + input_dim));
  }
  return {theta.leftCols(state_dim), theta.rightCols(input_dim)};
}

double covariance_condition(const EstimatorState& state) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(state.covariance, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

}  // namespace dmac
