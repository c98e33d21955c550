#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "hdsdm/inference.hpp"
#include "hdsdm/priors.hpp"

using namespace hdsdm;

namespace {

EffectDecl spline(const std::string& id, int k) {
  EffectDecl d;
  d.id = id;
  d.kind = EffectKind::PSpline;
  d.columns = {id};
  d.ranges = {{0.0, 1.0}};
  d.basis_size = k;
  return d;
}

Dataset synthetic(int n, int covariates) {
  Rng rng = make_stream(1, 0);
  Dataset d;
  d.y.resize(n);
  for (int c = 0; c < covariates; ++c) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = uniform01(rng);
    d.columns["x" + std::to_string(c)] = x;
  }
  for (int i = 0; i < n; ++i) d.y[i] = uniform01(rng) < 0.5 + 0.3 * std::sin(6.0 * d.columns["x0"][i]) ? 1 : 0;
  return d;
}

}  // namespace

static void BM_StandardizeSpline(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const std::vector<EffectDecl> decls{spline("x", k)};
  for (auto _ : state) benchmark::DoNotOptimize(build_terms(decls));
}
BENCHMARK(BM_StandardizeSpline)->Arg(10)->Arg(20)->Arg(40);

static void BM_KldDistance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = (i + 0.5) / n;
  const Eigen::VectorXd d0 = (x.array() - 0.5) * std::sqrt(12.0);
  Eigen::MatrixXd d1(n, 5);
  for (int j = 0; j < 5; ++j) d1.col(j) = ((j + 2) * std::numbers::pi * x.array()).cos().matrix();
  const Eigen::MatrixXd s0 = d0 * d0.transpose(), s1 = d1 * d1.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(kld_distance(0.3, 1e-6, s0, s1));
}
BENCHMARK(BM_KldDistance)->Arg(50)->Arg(200);

static void BM_FitIterations(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ModelSpec spec;
  spec.effects = {spline("x0", 10), spline("x1", 10)};
  spec.priors = {PriorSpec::jeffreys(), PriorSpec::uniform("omega_X"), PriorSpec::pc0("omega_N_x0", 0.1),
                 PriorSpec::pc0("omega_N_x1", 0.1)};
  const AssembledModel m = assemble(spec, synthetic(n, 2));
  McmcSettings s;
  s.chains = 1;
  s.iterations = 200;
  s.burn_in = 100;
  for (auto _ : state) benchmark::DoNotOptimize(fit(m, s));
  state.SetItemsProcessed(state.iterations() * s.iterations);
}
BENCHMARK(BM_FitIterations)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
