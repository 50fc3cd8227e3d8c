#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dls/kernels.hpp"

namespace {

using namespace dls;

const EllipsoidMatrix kA = ls_matrix({0.6, 5.0, 0.035, 0.6});
const EllipsoidMatrix kB = ls_matrix({0.6, 8.5, 0.035, 0.6});
const GravityLoad kGravity = gravity_decompose(0.5, 9.81, 0.785, -1.5708);

std::vector<Twist> twists(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.005, 0.005);
  std::vector<Twist> out(n);
  for (Twist& v : out) v = {u(rng), u(rng), 10.0 * u(rng)};
  return out;
}

template <bool Parallel>
void BM_TwistToWrench(benchmark::State& state) {
  const auto v = twists(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto w = Parallel ? kernels::parallel::twist_to_wrench_batch(kA, v)
                      : kernels::serial::twist_to_wrench_batch(kA, v);
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_MaxDissipation(benchmark::State& state) {
  const auto w = kernels::serial::twist_to_wrench_batch(kA, twists(static_cast<std::size_t>(state.range(0))));
  const Twist v{0.001, -0.002, 0.01};
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::max_dissipation(w, v)
                                      : kernels::serial::max_dissipation(w, v));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SlipMargins(benchmark::State& state) {
  const auto v = twists(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto m = Parallel ? kernels::parallel::slip_margins_batch(v, kA, kB, kGravity)
                      : kernels::serial::slip_margins_batch(v, kA, kB, kGravity);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_GridArgmin(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::Vector3d target(0.1, -0.2, 0.3);
  const kernels::GridObjective f = [&target](const Eigen::Vector3d& x) {
    return (x - target).norm() + 0.1 * x.squaredNorm();
  };
  const Eigen::Vector3d lo = -Eigen::Vector3d::Ones();
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::grid_argmin(f, lo, -lo, n)
                      : kernels::serial::grid_argmin(f, lo, -lo, n);
    benchmark::DoNotOptimize(r.value);
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

BENCHMARK(BM_TwistToWrench<false>)->Name("twist_to_wrench/serial")->Arg(1 << 16);
BENCHMARK(BM_TwistToWrench<true>)->Name("twist_to_wrench/parallel")->Arg(1 << 16);
BENCHMARK(BM_MaxDissipation<false>)->Name("max_dissipation/serial")->Arg(1 << 18);
BENCHMARK(BM_MaxDissipation<true>)->Name("max_dissipation/parallel")->Arg(1 << 18);
BENCHMARK(BM_SlipMargins<false>)->Name("slip_margins/serial")->Arg(1 << 16);
BENCHMARK(BM_SlipMargins<true>)->Name("slip_margins/parallel")->Arg(1 << 16);
BENCHMARK(BM_GridArgmin<false>)->Name("grid_argmin/serial")->Arg(41);
BENCHMARK(BM_GridArgmin<true>)->Name("grid_argmin/parallel")->Arg(41);

}  // namespace

BENCHMARK_MAIN();
