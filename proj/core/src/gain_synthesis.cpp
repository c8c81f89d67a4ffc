#include "dmac/gain_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dmac/errors.hpp"

namespace dmac {

namespace {

using Eigen::MatrixXd;

// Closed loops with a spectral radius this close to 1 are treated as not
// Schur: an unreachable eigenvalue at exactly 1 lands within roundoff of it.
constexpr double kSchurMargin = 1e-8;

bool is_schur(double radius) { return radius < 1.0 - kSchurMargin; }

MatrixXd lqr_gain(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w, const MatrixXd& P) {
  const MatrixXd bt_p = B.transpose() * P;
  return -(w.input + bt_p * B).ldlt().solve(bt_p * A);
}

double relative_residual(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w,
                         const MatrixXd& P) {
  return dare_residual(A, B, w, P).norm() / std::max(1.0, P.norm());
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

// Stabilizing-solution iteration of Chu, Fan and Lin. With G = B R_2^{-1} B',
// H -> P quadratically when (A, B) is stabilizable and (A, R_1) detectable.
MatrixXd doubling(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w,
                  const DareOptions& opt, double& last_change) {
  const Eigen::Index n = A.rows();
  const MatrixXd I = MatrixXd::Identity(n, n);
  MatrixXd Ak = A;
  MatrixXd Gk = B * w.input.llt().solve(B.transpose());
  MatrixXd Hk = w.state;
  Gk = 0.5 * (Gk + Gk.transpose());

  last_change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::PartialPivLU<MatrixXd> lu(I + Gk * Hk);
    const MatrixXd w_a = lu.solve(Ak);       // (I + G H)^{-1} A
    const MatrixXd w_g = lu.solve(Gk);       // (I + G H)^{-1} G
    MatrixXd h_next = Hk + Ak.transpose() * Hk * w_a;
    MatrixXd g_next = Gk + Ak * w_g * Ak.transpose();
    Ak = Ak * w_a;
    h_next = 0.5 * (h_next + h_next.transpose());
    g_next = 0.5 * (g_next + g_next.transpose());
    if (!all_finite(h_next) || !all_finite(Ak)) break;
    last_change = (h_next - Hk).norm() / std::max(1.0, h_next.norm());
    Hk = std::move(h_next);
    Gk = std::move(g_next);
    if (last_change < 1e-15) break;
    if (last_change < 1e-12 && relative_residual(A, B, w, Hk) < 0.1 * opt.tolerance) break;
  }
  return Hk;
}

MatrixXd fixed_point(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w,
                     const DareOptions& opt, double& last_residual) {
  MatrixXd P = w.state;
  last_residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const MatrixXd bt_p = B.transpose() * P;
    const MatrixXd s = w.input + bt_p * B;
    MatrixXd next = w.state + A.transpose() * P * A -
                    (bt_p * A).transpose() * s.ldlt().solve(bt_p * A);
    next = 0.5 * (next + next.transpose());
    if (!all_finite(next)) break;
    P = std::move(next);
    last_residual = relative_residual(A, B, w, P);
    if (last_residual < opt.tolerance) break;
  }
  return P;
}

// Newton correction on a converged iterate: solve D - Ac' D Ac = residual(P)
// by squaring Ac, then keep P + D only if the residual actually drops. Both
// iterations stop at roundoff that scales with |A|^2 |P|; this pulls the
// residual back down to the evaluation floor for large P.
MatrixXd newton_polish(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w, MatrixXd P) {
  double best = dare_residual(A, B, w, P).norm();
  for (int step = 0; step < 3 && best > 0.0; ++step) {
    MatrixXd Ac = A + B * lqr_gain(A, B, w, P);
    if (!is_schur(spectral_radius(Ac))) break;
    MatrixXd D = dare_residual(A, B, w, P);
    for (int it = 0; it < 64; ++it) {
      const MatrixXd term = Ac.transpose() * D * Ac;
      D += term;
      Ac = Ac * Ac;
      if (term.norm() <= std::numeric_limits<double>::epsilon() * D.norm()) break;
    }
    MatrixXd next = P + 0.5 * (D + D.transpose());
    const double r = dare_residual(A, B, w, next).norm();
    if (!(r < best)) break;
    best = r;
    P = std::move(next);
  }
  return P;
}

}  // namespace

LqrWeights LqrWeights::scaled_identity(Eigen::Index augmented_dim, double state_scale,
                                       Eigen::Index input_dim, double input_scale) {
  return {state_scale * MatrixXd::Identity(augmented_dim, augmented_dim),
          input_scale * MatrixXd::Identity(input_dim, input_dim)};
}

void LqrWeights::validate() const {
  if (state.rows() != state.cols() || input.rows() != input.cols()) {
    throw ConfigError("lqr weights must be square");
  }
  if ((state - state.transpose()).norm() > 1e-12 * std::max(1.0, state.norm()) ||
      (input - input.transpose()).norm() > 1e-12 * std::max(1.0, input.norm())) {
    throw ConfigError("lqr weights must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(state, Eigen::EigenvaluesOnly);
  if (state.size() > 0 && es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, state.norm())) {
    throw ConfigError("lqr state weight R_1 must be positive semidefinite");
  }
  if (input.size() == 0) throw ConfigError("lqr input weight R_2 must not be empty");
  Eigen::SelfAdjointEigenSolver<MatrixXd> ei(input, Eigen::EigenvaluesOnly);
  if (!(ei.eigenvalues().minCoeff() > 0.0)) {
    throw ConfigError("lqr input weight R_2 must be positive definite");
  }
}

MatrixXd GainPair::augmented_gain() const {
  MatrixXd k(state_gain.rows(), state_gain.cols() + integral_gain.cols());
  k << state_gain, integral_gain;
  return k;
}

AugmentedModel build_augmented(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C) {
  const Eigen::Index nx = A.rows();
  const Eigen::Index nu = B.cols();
  const Eigen::Index ny = C.rows();
  if (A.cols() != nx || B.rows() != nx || C.cols() != nx) {
    throw DimensionError(fmt::format(
        "build_augmented: incompatible shapes A {}x{}, B {}x{}, C {}x{}", A.rows(), A.cols(),
        B.rows(), B.cols(), C.rows(), C.cols()));
  }
  const Eigen::Index na = nx + ny;
  AugmentedModel m;
  m.A_a = MatrixXd::Zero(na, na);
  m.A_a.topLeftCorner(nx, nx) = A;
  m.A_a.bottomLeftCorner(ny, nx) = -C;
  m.A_a.bottomRightCorner(ny, ny).setIdentity();
  m.B_a = MatrixXd::Zero(na, nu);
  m.B_a.topRows(nx) = B;
  m.B_r = MatrixXd::Zero(na, ny);
  m.B_r.bottomRows(ny).setIdentity();
  m.C_a = MatrixXd::Zero(ny, na);
  m.C_a.leftCols(nx) = C;
  return m;
}

MatrixXd dare_residual(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w,
                       const MatrixXd& P) {
  const MatrixXd bt_p_a = B.transpose() * P * A;
  const MatrixXd s = w.input + B.transpose() * P * B;
  return w.state + A.transpose() * P * A - bt_p_a.transpose() * s.ldlt().solve(bt_p_a) - P;
}

MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const LqrWeights& weights,
                    const DareOptions& options) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || weights.state.rows() != n ||
      weights.state.cols() != n || weights.input.rows() != B.cols() ||
      weights.input.cols() != B.cols()) {
    throw DimensionError("solve_dare: inconsistent dimensions");
  }
  weights.validate();

  double progress = 0.0;
  MatrixXd P = options.method == DareMethod::Doubling
                   ? doubling(A, B, weights, options, progress)
                   : fixed_point(A, B, weights, options, progress);

  if (P.allFinite() && relative_residual(A, B, weights, P) < options.tolerance) {
    P = newton_polish(A, B, weights, std::move(P));
  }
  const double residual =
      P.allFinite() ? relative_residual(A, B, weights, P) : std::numeric_limits<double>::infinity();
  if (!(residual < options.tolerance)) {
    throw SynthesisFailure(
        fmt::format("solve_dare: no convergence (relative residual {:.3e})", residual), residual);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -options.tolerance * std::max(1.0, P.norm())) {
    throw SynthesisFailure("solve_dare: solution is not positive semidefinite", residual);
  }
  const double radius = spectral_radius(A + B * lqr_gain(A, B, weights, P));
  if (!is_schur(radius)) {
    throw SynthesisFailure(
        fmt::format("solve_dare: solution is not stabilizing (closed-loop spectral radius {:.12f})",
                    radius),
        residual);
  }
  return P;
}

GainPair compute_gains(const AugmentedModel& model, const LqrWeights& weights,
                       const DareOptions& options) {
  const MatrixXd P = solve_dare(model.A_a, model.B_a, weights, options);
  const MatrixXd k_a = lqr_gain(model.A_a, model.B_a, weights, P);

  GainPair gains;
  gains.state_gain = k_a.leftCols(model.state_dim());
  gains.integral_gain = k_a.rightCols(model.output_dim());
  gains.riccati = P;
  gains.spectral_radius = spectral_radius(model.A_a + model.B_a * k_a);
  if (!is_schur(gains.spectral_radius)) {
    throw SynthesisFailure(
        fmt::format("compute_gains: closed loop not Schur (spectral radius {:.6f})",
                    gains.spectral_radius),
        dare_residual(model.A_a, model.B_a, weights, P).norm());
  }
  return gains;
}

double spectral_radius(const MatrixXd& M) {
  if (M.rows() != M.cols()) throw DimensionError("spectral_radius: matrix must be square");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace dmac
