// Contraction and linearized-operator timings.
//
//   rlk_bench --benchmark_filter=Contract
//
// Arguments are /N/workers; the naive path is single threaded by construction.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "rlk/collision.hpp"
#include "rlk/equilibrium.hpp"
#include "rlk/linearized.hpp"

namespace {

struct Fields {
  rlk::MomentumGrid grid;
  std::vector<double> f, v, A, B;
  explicit Fields(std::size_t n) : grid(n, 5.0) {
    const std::size_t sz = grid.size();
    f.resize(sz);
    rlk::juttner_into(rlk::FluidState{1.0, {0.1, 0.0, 0.0}, 0.5}, grid, f);
    v.resize(3 * sz);
    for (std::size_t a = 0; a < sz; ++a)
      for (int d = 0; d < 3; ++d) v[3 * a + d] = f[a] * std::cos(0.3 * static_cast<double>(a + d));
    A.resize(6 * sz);
    B.resize(3 * sz);
  }
};

rlk::CollisionOptions options(int workers, rlk::KernelCache cache) {
  rlk::CollisionOptions o;
  o.workers = workers;
  o.cache = cache;
  return o;
}

void Contract_Naive(benchmark::State& st) {
  Fields x(static_cast<std::size_t>(st.range(0)));
  rlk::CollisionOperator op(x.grid, options(1, rlk::KernelCache::Off));
  for (auto _ : st) {
    op.contract_naive(1, x.f, x.v, x.A, x.B);
    benchmark::DoNotOptimize(x.A.data());
  }
  st.counters["pairs"] = benchmark::Counter(static_cast<double>(x.grid.size() * x.grid.size()),
                                            benchmark::Counter::kIsIterationInvariantRate);
}

void Contract_Blocked(benchmark::State& st) {
  Fields x(static_cast<std::size_t>(st.range(0)));
  rlk::CollisionOperator op(x.grid, options(static_cast<int>(st.range(1)), rlk::KernelCache::Auto));
  for (auto _ : st) {
    op.contract(1, x.f, x.v, x.A, x.B);
    benchmark::DoNotOptimize(x.A.data());
  }
  st.counters["pairs"] = benchmark::Counter(static_cast<double>(x.grid.size() * x.grid.size()),
                                            benchmark::Counter::kIsIterationInvariantRate);
}

void Collide(benchmark::State& st) {
  Fields x(static_cast<std::size_t>(st.range(0)));
  rlk::CollisionOperator op(x.grid, options(static_cast<int>(st.range(1)), rlk::KernelCache::Auto));
  std::vector<double> C(x.grid.size());
  for (auto _ : st) {
    op.collide_self(x.f, C);
    benchmark::DoNotOptimize(C.data());
  }
}

void ApplyL(benchmark::State& st) {
  Fields x(static_cast<std::size_t>(st.range(0)));
  rlk::CollisionOperator op(x.grid, options(static_cast<int>(st.range(1)), rlk::KernelCache::Auto));
  rlk::FluidState s{1.0, {0.1, 0.0, 0.0}, 0.5};
  rlk::LinearizedOperator L(op, s);
  auto g = rlk::random_smooth_field(x.grid, s, 7);
  for (auto _ : st) {
    auto r = L.apply_L(g);
    benchmark::DoNotOptimize(r.data());
  }
}

}  // namespace

BENCHMARK(Contract_Naive)->Args({8})->Args({12})->Args({16})->Unit(benchmark::kMillisecond);
BENCHMARK(Contract_Blocked)->ArgsProduct({{8, 12, 16}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond);
BENCHMARK(Collide)->ArgsProduct({{12, 16}, {1}})->Unit(benchmark::kMillisecond);
BENCHMARK(ApplyL)->ArgsProduct({{12, 16}, {1}})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
