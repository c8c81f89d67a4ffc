#pragma once

#include <Eigen/Dense>

namespace dmac {

/// Plant augmented with the tracking integrator q_{k+1} = q_k + r_k - C xi_k:
///
///   A_a = [ A  0 ]   B_a = [ B ]   B_r = [ 0 ]   C_a = [ C  0 ]
///         [-C  I ]         [ 0 ]         [ I ]
struct AugmentedModel {
  Eigen::MatrixXd A_a;
  Eigen::MatrixXd B_a;
  Eigen::MatrixXd B_r;
  Eigen::MatrixXd C_a;

  Eigen::Index state_dim() const { return A_a.rows() - C_a.rows(); }
  Eigen::Index output_dim() const { return C_a.rows(); }
  Eigen::Index input_dim() const { return B_a.cols(); }
};

/// LQR weights: `state` (R_1) on the augmented state, `input` (R_2) on u.
struct LqrWeights {
  Eigen::MatrixXd state;
  Eigen::MatrixXd input;

  static LqrWeights scaled_identity(Eigen::Index augmented_dim, double state_scale,
                                    Eigen::Index input_dim, double input_scale);
  /// R_1 symmetric PSD, R_2 symmetric PD.
  void validate() const;
};

/// Control law u = K_xi xi + K_q q, i.e. u = K_a x_a with K_a = [K_xi K_q].
struct GainPair {
  Eigen::MatrixXd state_gain;     // K_xi, l_u x l_xi
  Eigen::MatrixXd integral_gain;  // K_q,  l_u x l_y
  Eigen::MatrixXd riccati;        // DARE solution on the augmented state
  double spectral_radius = 0.0;   // max |eig(A_a + B_a K_a)|

  Eigen::MatrixXd augmented_gain() const;
};

enum class DareMethod {
  Doubling,    // structure-preserving doubling, quadratic convergence
  FixedPoint,  // iterated Riccati difference equation from P = R_1
};

struct DareOptions {
  double tolerance = 1e-9;  // relative residual |res|_F / max(1, |P|_F)
  int max_iterations = 10000;
  DareMethod method = DareMethod::Doubling;
};

AugmentedModel build_augmented(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& C);

/// Right-hand side minus left-hand side of the DARE at P.
Eigen::MatrixXd dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const LqrWeights& weights, const Eigen::MatrixXd& P);

/// Stabilizing solution of
///   P = R_1 + A'PA - A'PB (R_2 + B'PB)^{-1} B'PA.
/// Throws SynthesisFailure (carrying the last residual) when no solution is
/// reached within the iteration budget, or when the solution found does not
/// stabilize A + BK with a spectral radius below 1 - 1e-8.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const LqrWeights& weights, const DareOptions& options = {});

/// K_a = -(R_2 + B_a'PB_a)^{-1} B_a'PA_a, split into (K_xi, K_q). The closed
/// loop is A_a + B_a K_a; a non-Schur result is reported as SynthesisFailure.
GainPair compute_gains(const AugmentedModel& model, const LqrWeights& weights,
                       const DareOptions& options = {});

double spectral_radius(const Eigen::MatrixXd& M);

}  // namespace dmac
