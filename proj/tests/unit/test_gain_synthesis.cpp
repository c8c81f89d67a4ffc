#include <cmath>
#include <numbers>

#include <doctest.h>

#include "dmac/errors.hpp"
#include "dmac/gain_synthesis.hpp"
#include "oracles.hpp"

using namespace dmac;
using dmac::testing::random_matrix;
using dmac::testing::relative_frobenius;
using dmac::testing::Rng;

namespace {

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

LqrWeights weights(Eigen::Index n, double q, Eigen::Index m, double r) {
  return LqrWeights::scaled_identity(n, q, m, r);
}

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

}  // namespace

TEST_SUITE("gain_synthesis") {
  TEST_CASE("augmented blocks are placed around the integrator") {
    const auto aug = build_augmented(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0, 1),
                                     Eigen::RowVector2d(1, 0));
    Eigen::Matrix3d A_a;
    A_a << 1, 0, 0, 0, 1, 0, -1, 0, 1;
    CHECK(aug.A_a == A_a);
    CHECK(aug.B_a == Eigen::Vector3d(0, 1, 0));
    CHECK(aug.B_r == Eigen::Vector3d(0, 0, 1));
    CHECK(aug.C_a == Eigen::RowVector3d(1, 0, 0));
    CHECK(aug.state_dim() == 2);
    CHECK(aug.output_dim() == 1);
    CHECK(aug.input_dim() == 1);
  }

  TEST_CASE("two outputs enlarge the augmented state by two") {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 3);
    C(0, 0) = 1;
    C(1, 2) = 1;
    const auto aug = build_augmented(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Ones(3, 1), C);
    CHECK(aug.A_a.rows() == 5);
    CHECK(aug.A_a.cols() == 5);
    CHECK(aug.B_r.cols() == 2);
  }

  TEST_CASE("zero plant and output give a pure integrator block") {
    const auto aug = build_augmented(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Ones(2, 1),
                                     Eigen::MatrixXd::Zero(1, 2));
    CHECK(aug.A_a.bottomRightCorner(1, 1) == Eigen::MatrixXd::Identity(1, 1));
    CHECK(aug.A_a.topRows(2).isZero(0.0));
    CHECK(aug.A_a.bottomLeftCorner(1, 2).isZero(0.0));
  }

  TEST_CASE("block extraction reproduces the inputs") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index n = 1 + trial % 6;
      const Eigen::Index m = 1 + trial % 3;
      const Eigen::Index p = 1 + trial % 2;
      const Eigen::MatrixXd A = random_matrix(rng, n, n);
      const Eigen::MatrixXd B = random_matrix(rng, n, m);
      const Eigen::MatrixXd C = random_matrix(rng, p, n);
      const auto aug = build_augmented(A, B, C);
      CHECK(aug.A_a.topLeftCorner(n, n) == A);
      CHECK(aug.A_a.topRightCorner(n, p).isZero(0.0));
      CHECK(aug.A_a.bottomLeftCorner(p, n) == -C);
      CHECK(aug.A_a.bottomRightCorner(p, p) == Eigen::MatrixXd::Identity(p, p));
      CHECK(aug.B_a.topRows(n) == B);
      CHECK(aug.B_a.bottomRows(p).isZero(0.0));
      CHECK(aug.C_a.leftCols(n) == C);
    }
  }

  TEST_CASE("augmentation rejects mismatched shapes") {
    CHECK_THROWS_AS(build_augmented(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 1),
                                    Eigen::MatrixXd::Zero(1, 2)),
                    DimensionError);
    CHECK_THROWS_AS(build_augmented(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 1),
                                    Eigen::MatrixXd::Zero(1, 2)),
                    DimensionError);
    CHECK_THROWS_AS(build_augmented(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 1),
                                    Eigen::MatrixXd::Zero(1, 3)),
                    DimensionError);
  }

  TEST_CASE("scalar riccati instances") {
    for (auto method : {DareMethod::Doubling, DareMethod::FixedPoint}) {
      DareOptions opts;
      opts.method = method;
      const auto w = weights(1, 1.0, 1, 1.0);
      const auto p0 = solve_dare(scalar(0.0), scalar(1.0), w, opts);
      CHECK(p0(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
      const auto p1 = solve_dare(scalar(1.0), scalar(1.0), w, opts);
      CHECK(std::abs(p1(0, 0) - kGolden) < 1e-9);
      CHECK(std::abs(p1(0, 0) - dmac::testing::scalar_dare(1, 1, 1, 1)) < 1e-9);
    }
  }

  TEST_CASE("scalar riccati matches the quadratic root over a grid") {
    for (double a : {-1.5, -0.3, 0.0, 0.7, 1.0, 2.0}) {
      for (double b : {0.2, 1.0, -3.0}) {
        for (double r : {0.01, 1.0, 100.0}) {
          const auto P = solve_dare(scalar(a), scalar(b), weights(1, 2.0, 1, r));
          CAPTURE(a);
          CAPTURE(b);
          CAPTURE(r);
          CHECK(P(0, 0) == doctest::Approx(dmac::testing::scalar_dare(a, b, 2.0, r)).epsilon(1e-9));
        }
      }
    }
  }

  TEST_CASE("large solutions keep an absolute residual near roundoff") {
    // Weak actuation of an unstable mode: P is about (a^2 - 1) r / b^2.
    Rng rng(31);
    for (auto method : {DareMethod::Doubling, DareMethod::FixedPoint}) {
      DareOptions opts;
      opts.method = method;
      const auto P = solve_dare(scalar(1.7), scalar(0.01), weights(1, 1.0, 1, 1.0), opts);
      CHECK(P(0, 0) > 1e4);
      CHECK(P(0, 0) == doctest::Approx(dmac::testing::scalar_dare(1.7, 0.01, 1.0, 1.0)).epsilon(1e-12));
      CHECK(dare_residual(scalar(1.7), scalar(0.01), weights(1, 1.0, 1, 1.0), P).norm() < 1e-8);
    }
    for (int trial = 0; trial < 10; ++trial) {
      auto [A, B] = dmac::testing::random_system(rng, 5, 1, 1.7);
      B *= 0.05;
      const auto w = weights(5, 1.0, 1, 1.0);
      const auto P = solve_dare(A, B, w);
      CAPTURE(P.norm());
      CHECK(dare_residual(A, B, w, P).norm() < 1e-13 * P.norm());
    }
  }

  TEST_CASE("unstabilizable pair is a synthesis failure") {
    // Integrator mode with eigenvalue 1 that the input cannot reach.
    Eigen::Matrix2d A;
    A << 0.5, 0.0, 0.0, 1.0;
    const Eigen::Vector2d B(1.0, 0.0);
    for (auto method : {DareMethod::Doubling, DareMethod::FixedPoint}) {
      DareOptions opts;
      opts.method = method;
      opts.max_iterations = 2000;
      CHECK_THROWS_AS(solve_dare(A, B, weights(2, 1.0, 1, 1.0), opts), SynthesisFailure);
    }
    const auto aug = build_augmented(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Zero(1, 1),
                                     Eigen::MatrixXd::Identity(1, 1));
    CHECK_THROWS_AS(compute_gains(aug, weights(2, 1.0, 1, 1.0)), SynthesisFailure);
  }

  TEST_CASE("more tracked outputs than inputs cannot be stabilized") {
    Rng rng(55);
    auto [A, B] = dmac::testing::random_system(rng, 3, 1, 0.8);
    const auto aug = build_augmented(A, B, random_matrix(rng, 2, 3));
    CHECK_THROWS_AS(compute_gains(aug, weights(5, 1.0, 1, 1.0)), SynthesisFailure);
  }

  TEST_CASE("unstable uncontrollable mode reports its residual") {
    Eigen::Matrix2d A;
    A << 2.0, 0.0, 0.0, 0.5;
    const Eigen::Vector2d B(0.0, 1.0);
    try {
      (void)solve_dare(A, B, weights(2, 1.0, 1, 1.0));
      FAIL("expected SynthesisFailure");
    } catch (const SynthesisFailure& e) {
      CHECK(!(e.residual() < 1e-9));
    }
  }

  TEST_CASE("doubling and fixed point agree with the eigenvector solution") {
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
      const Eigen::Index n = 2 + trial % 5;
      const Eigen::Index m = 1 + trial % 2;
      auto [A, B] = dmac::testing::random_system(rng, n, m, 0.6 + 0.05 * trial);
      const Eigen::MatrixXd Q = dmac::testing::random_spd(rng, n, 0.5, 2.0);
      const Eigen::MatrixXd R = dmac::testing::random_spd(rng, m, 0.5, 2.0);
      const LqrWeights w{Q, R};
      DareOptions fixed;
      fixed.method = DareMethod::FixedPoint;
      fixed.max_iterations = 100000;
      const Eigen::MatrixXd pd = solve_dare(A, B, w);
      const Eigen::MatrixXd pf = solve_dare(A, B, w, fixed);
      const Eigen::MatrixXd pe = dmac::testing::dare_by_eigenvectors(A, B, Q, R);
      CAPTURE(trial);
      CHECK(relative_frobenius(pd, pe) < 1e-7);
      CHECK(relative_frobenius(pf, pe) < 1e-7);
    }
  }

  TEST_CASE("random stabilizable instances satisfy the equation and the Schur contract") {
    Rng rng(123);
    for (int trial = 0; trial < 60; ++trial) {
      const Eigen::Index n = 1 + trial % 6;
      const Eigen::Index m = 1 + trial % 2;
      // Tracking p outputs needs at least p inputs.
      const Eigen::Index p = m == 2 && trial % 4 == 1 ? 2 : 1;
      auto [A, B] = dmac::testing::random_system(rng, n, m, 0.3 + 0.025 * trial);
      const Eigen::MatrixXd C = random_matrix(rng, p, n);
      const auto aug = build_augmented(A, B, C);
      const auto w = weights(n + p, 1.0, m, 0.5);
      const auto gains = compute_gains(aug, w);
      const Eigen::MatrixXd res = dare_residual(aug.A_a, aug.B_a, w, gains.riccati);
      CAPTURE(trial);
      CHECK(res.norm() / std::max(1.0, gains.riccati.norm()) < 1e-8);
      const Eigen::MatrixXd closed = aug.A_a + aug.B_a * gains.augmented_gain();
      CHECK(spectral_radius(closed) < 1.0);
      CHECK(gains.spectral_radius == doctest::Approx(spectral_radius(closed)));
      CHECK((gains.riccati - gains.riccati.transpose()).norm() <= 1e-10 * gains.riccati.norm());
    }
  }

  TEST_CASE("golden ratio gain") {
    const auto aug_scalar = [] {
      AugmentedModel m;
      m.A_a = scalar(1.0);
      m.B_a = scalar(1.0);
      m.B_r = Eigen::MatrixXd::Zero(1, 0);
      m.C_a = Eigen::MatrixXd::Zero(0, 1);
      return m;
    }();
    const auto gains = compute_gains(aug_scalar, weights(1, 1.0, 1, 1.0));
    const double k = gains.augmented_gain()(0, 0);
    CHECK(k == doctest::Approx(-kGolden / (1.0 + kGolden)).epsilon(1e-9));
    CHECK(k == doctest::Approx(-(std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-9));
    CHECK(gains.spectral_radius == doctest::Approx(1.0 + k).epsilon(1e-9));
    CHECK(gains.spectral_radius < 1.0);
  }

  TEST_CASE("gain formula with a zero plant matrix") {
    // With A = 0 the state gain comes only from the integrator coupling:
    // K_xi = -S^-1 B' (P11 * 0 - P12 C) = S^-1 B' P12 C.
    Rng rng(9);
    const Eigen::MatrixXd B = random_matrix(rng, 3, 2);
    const Eigen::MatrixXd C = random_matrix(rng, 1, 3);
    const auto aug = build_augmented(Eigen::MatrixXd::Zero(3, 3), B, C);
    const auto gains = compute_gains(aug, weights(4, 1.0, 2, 1.0));
    const Eigen::MatrixXd& P = gains.riccati;
    const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(2, 2) + B.transpose() * P.topLeftCorner(3, 3) * B;
    const Eigen::MatrixXd K_xi = S.ldlt().solve(B.transpose() * P.topRightCorner(3, 1) * C);
    const Eigen::MatrixXd K_q = -S.ldlt().solve(B.transpose() * P.topRightCorner(3, 1));
    CHECK((gains.state_gain - K_xi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((gains.integral_gain - K_q).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(gains.spectral_radius < 1.0);
  }

  TEST_CASE("larger input weight never increases the scalar gain") {
    for (double a : {0.2, 0.9, 1.0, 1.5}) {
      for (double b : {0.1, 1.0, 4.0}) {
        double previous = std::numeric_limits<double>::infinity();
        for (double r : {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
          AugmentedModel m;
          m.A_a = scalar(a);
          m.B_a = scalar(b);
          m.B_r = Eigen::MatrixXd::Zero(1, 0);
          m.C_a = Eigen::MatrixXd::Zero(0, 1);
          const double k = std::abs(compute_gains(m, weights(1, 1.0, 1, r)).augmented_gain()(0, 0));
          CAPTURE(a);
          CAPTURE(b);
          CAPTURE(r);
          CHECK(k <= previous * (1.0 + 1e-12));
          previous = k;
        }
      }
    }
  }

  TEST_CASE("weights are validated") {
    CHECK_THROWS_AS(weights(2, 1.0, 1, 0.0).validate(), ConfigError);
    CHECK_THROWS_AS(weights(2, -1.0, 1, 1.0).validate(), ConfigError);
    LqrWeights asym{Eigen::Matrix2d::Identity(), scalar(1.0)};
    asym.state(0, 1) = 0.3;
    CHECK_THROWS_AS(asym.validate(), ConfigError);
    LqrWeights empty{Eigen::Matrix2d::Identity(), Eigen::MatrixXd()};
    CHECK_THROWS_AS(empty.validate(), ConfigError);
    CHECK_NOTHROW(weights(3, 0.0, 1, 1.0).validate());
    CHECK_THROWS_AS(solve_dare(scalar(1.0), scalar(1.0), weights(1, 1.0, 1, 0.0)), ConfigError);
  }

  TEST_CASE("spectral radius examples") {
    CHECK(spectral_radius(Eigen::Vector2d(0.5, -0.9).asDiagonal().toDenseMatrix()) ==
          doctest::Approx(0.9).epsilon(1e-14));
    const double theta = 0.7;
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    CHECK(spectral_radius(0.8 * rot) == doctest::Approx(0.8).epsilon(1e-12));
    Eigen::Matrix2d companion;
    companion << 1.0, 1.0, 1.0, 0.0;
    CHECK(spectral_radius(companion) == doctest::Approx(kGolden).epsilon(1e-12));
    CHECK(spectral_radius(Eigen::MatrixXd()) == 0.0);
  }
}
