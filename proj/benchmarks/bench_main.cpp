#include <random>

#include <benchmark/benchmark.h>

#include "dmac/config.hpp"
#include "dmac/controller.hpp"
#include "dmac/errors.hpp"
#include "dmac/estimator.hpp"
#include "dmac/gain_synthesis.hpp"
#include "dmac/harness.hpp"
#include "dmac/plants.hpp"

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void BM_RlsUpdate(benchmark::State& state) {
  const auto lx = static_cast<Eigen::Index>(state.range(0));
  dmac::EstimatorConfig config{lx, 1, 0.995, 100.0 * Eigen::MatrixXd::Identity(lx + 1, lx + 1)};
  auto est = dmac::new_estimator(config);
  std::mt19937_64 rng(1);
  // A repeated regressor lets P grow without bound in the other directions.
  const Eigen::MatrixXd phis = random_matrix(rng, lx + 1, 256);
  const Eigen::MatrixXd nexts = random_matrix(rng, lx, 256);
  Eigen::Index i = 0;
  for (auto _ : state) {
    est = dmac::rls_update(est, dmac::Regressor(phis.col(i)), nexts.col(i));
    benchmark::DoNotOptimize(est.theta.data());
    i = (i + 1) % phis.cols();
  }
}
BENCHMARK(BM_RlsUpdate)->Arg(2)->Arg(7)->Arg(20);

void BM_SolveDare(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(2);
  Eigen::MatrixXd A = random_matrix(rng, n, n);
  A *= 0.95 / A.eigenvalues().cwiseAbs().maxCoeff();
  const Eigen::MatrixXd B = random_matrix(rng, n, 1);
  const auto w = dmac::LqrWeights::scaled_identity(n, 1.0, 1, 1.0);
  dmac::DareOptions opts;
  opts.method = static_cast<dmac::DareMethod>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(dmac::solve_dare(A, B, w, opts).data());
}
BENCHMARK(BM_SolveDare)->Args({8, 0})->Args({8, 1});

void BM_BurgersRhs(benchmark::State& state) {
  const dmac::BurgersParams p;
  std::mt19937_64 rng(3);
  const Eigen::VectorXd w = random_matrix(rng, p.nodes, 1).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(dmac::burgers_rhs(w, 0.1, p).data());
}
BENCHMARK(BM_BurgersRhs);

void BM_ClosedLoopStep(benchmark::State& state) {
  const auto spec = dmac::preset(state.range(0) == 0 ? "mck" : "burgers");
  const auto plant = dmac::build_plant(spec.plant);
  dmac::Controller ctl(dmac::make_controller_config(plant, spec.dmac, 1));
  std::mt19937_64 rng(4);
  Eigen::VectorXd x = random_matrix(rng, plant.state_dim, 1).col(0);
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(1);
  for (auto _ : state) {
    try {
      const auto step = ctl.step(plant.measured_selector * x, r);
      x = dmac::rk4_propagate(plant.rhs, x, step.u, spec.sample_time, spec.substeps);
      if (x.lpNorm<Eigen::Infinity>() > 1e6) throw dmac::DivergenceError("bench reset", 0);
    } catch (const dmac::Error&) {
      // Burgers diverges under the preset weights; restart and keep timing.
      ctl = dmac::Controller(dmac::make_controller_config(plant, spec.dmac, 1));
      x = random_matrix(rng, plant.state_dim, 1).col(0);
    }
  }
}
BENCHMARK(BM_ClosedLoopStep)->Arg(0)->Arg(1);

}  // namespace
BENCHMARK_MAIN();
