#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "btnv/model.hpp"
#include "btnv/synthetic.hpp"
#include "btnv/vi.hpp"
#include "btnv/volterra.hpp"

namespace {

using namespace btnv;

// Cascaded-Tanks-sized problem: D = 3, M = 100, N = 1024.
struct Problem {
  LaggedInputMatrix windows;
  Vector y;
  ModelState state;
  std::vector<Matrix> moments;

  explicit Problem(std::size_t rank) {
    const auto u = random_input(1024, 1);
    windows = build_lagged_matrix(u, 100);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    y = Vector::NullaryExpr(1024, [&] { return normal(rng); });
    state = init_state(3, 100, rank, Priors{}, 3);
    moments = factor_moments(state, windows.matrix());
  }
};

void BM_CpdDot(benchmark::State& st) {
  const auto rank = static_cast<std::size_t>(st.range(0));
  const ModelState s = init_state(3, 100, rank, Priors{}, 0);
  const CpdFactors f = s.mean_factors();
  const Vector u = Vector::Ones(101);
  for (auto _ : st) benchmark::DoNotOptimize(cpd_dot(f, u));
}
BENCHMARK(BM_CpdDot)->Arg(2)->Arg(10)->Arg(20);

void BM_SecondMoment(benchmark::State& st) {
  Problem p(static_cast<std::size_t>(st.range(0)));
  const auto& f = p.state.factors[0];
  for (auto _ : st) benchmark::DoNotOptimize(second_moment(p.windows.matrix(), f.mean, f.covariance));
}
BENCHMARK(BM_SecondMoment)->Arg(2)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_ExpectedGram(benchmark::State& st) {
  Problem p(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(expected_gram(p.windows.matrix(), p.moments, 0));
}
BENCHMARK(BM_ExpectedGram)->Arg(2)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_FactorUpdate(benchmark::State& st) {
  Problem p(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(update_factor(p.state, p.windows.matrix(), p.y, 0, p.moments));
}
BENCHMARK(BM_FactorUpdate)->Arg(2)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& st) {
  Problem p(static_cast<std::size_t>(st.range(0)));
  FitConfig cfg;
  cfg.order = 3;
  cfg.initial_rank = p.state.rank();
  cfg.max_iter = 1;
  for (auto _ : st) benchmark::DoNotOptimize(identify_from(p.state, p.windows, p.y, cfg));
}
BENCHMARK(BM_Sweep)->Arg(2)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
