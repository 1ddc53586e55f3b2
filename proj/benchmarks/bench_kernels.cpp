// Microbenchmarks for the hot kernels. The acceptance-grade scaling claims
// live in the bench CLI subcommand; these are for spotting regressions in the
// inner loops themselves.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "rjepa/jepa.hpp"
#include "rjepa/matrix.hpp"
#include "rjepa/oracles.hpp"
#include "rjepa/rfp.hpp"
#include "rjepa/rgc.hpp"
#include "rjepa/rng.hpp"

using namespace rjepa;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void bm_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(n, n, rng);
  const Matrix b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}

void bm_rgc_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  const RgcWeights w = RgcWeights::random(n, 0.3 / std::sqrt(static_cast<double>(n)), false, rng);
  RgcState s = RgcState::zero(n);
  Vec x(n);
  for (auto& v : x) v = rng.normal();
  for (auto _ : state) {
    s = rgc_step(s, x, w);
    benchmark::DoNotOptimize(s);
  }
}

void bm_rfp_update(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  const RgcWeights w = RgcWeights::random(n, 0.3 / std::sqrt(static_cast<double>(n)), true, rng);
  RgcState s = RgcState::zero(n);
  Vec x(n);
  for (auto& v : x) v = rng.normal();
  RgcGates gates;
  const RgcState next = rgc_step(s, x, w, &gates);
  const RgcGateFactors mu = rgc_gate_factors(s, x, w, gates);
  const RgcSourceTerms src = rgc_source_terms(s, x, w, gates);
  benchmark::DoNotOptimize(next);

  SensitivityState sens = rfp_init(n);
  int t = 0;
  for (auto _ : state) {
    rfp_update(sens, ++t, mu, src);
    benchmark::DoNotOptimize(sens);
  }
}

void bm_rfp_grad_sequence(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int T = 16;
  Rng rng(4);
  JepaModel m = make_desk_model(n, n, n, PredictorKind::Linear, true, 4);
  m.rgc = RgcWeights::random(n, 0.3 / std::sqrt(static_cast<double>(n)), true, rng);
  std::vector<Vec> xs(T, Vec(n));
  for (auto& p : xs)
    for (auto& v : p) v = rng.normal();
  for (auto _ : state) {
    RfpResult r = rfp_grad(m, xs);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * T);
}

}  // namespace

BENCHMARK(bm_matmul)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(bm_rgc_step)->Arg(32)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_rfp_update)->Arg(32)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_rfp_grad_sequence)->Arg(32)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
