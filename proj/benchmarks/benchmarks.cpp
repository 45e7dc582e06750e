// Hot-path timings: intensity estimation, one permutation replicate,
// envelope machinery, and the reconstruction energy/proposal loop.

#include <benchmark/benchmark.h>

#include <vector>

#include "stsep/envelope.hpp"
#include "stsep/kernels.hpp"
#include "stsep/permutation.hpp"
#include "stsep/recon.hpp"
#include "stsep/rng.hpp"
#include "stsep/sim.hpp"
#include "stsep/stats.hpp"

using namespace stsep;

namespace {

PointPattern uniform_pattern(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PointST> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i)
    pts.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
  return PointPattern(std::move(pts), Window::unit_cube());
}

void bm_estimate_rho_st(benchmark::State& state) {
  PointPattern p = uniform_pattern(static_cast<int>(state.range(0)), 1);
  Bandwidths bw = select_bandwidths(p);
  Grid3 grid = build_grid(p.window(), 25, 25, 20);
  for (auto _ : state) {
    IntensityField f = estimate_rho_st(p, bw, grid);
    benchmark::DoNotOptimize(f.rho_st.data());
  }
}
BENCHMARK(bm_estimate_rho_st)->Arg(200)->Arg(600)->Arg(2000);

// One Monte Carlo replicate: reassign times by permuting the temporal
// basis rows, rebuild the product field, evaluate the statistic.
void bm_permutation_replicate(benchmark::State& state) {
  PointPattern p = uniform_pattern(600, 2);
  Bandwidths bw = select_bandwidths(p);
  Grid3 grid = build_grid(p.window(), 25, 25, 20);
  IntensityField data = estimate_rho_st(p, bw, grid);
  KernelBasis basis = compute_kernel_basis(p, bw, grid);
  KernelBasis permuted = basis;
  Rng rng(3);
  for (auto _ : state) {
    std::vector<std::uint32_t> perm = random_permutation(p.size(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i)
      permuted.temporal.row(static_cast<Eigen::Index>(i)) =
          basis.temporal.row(perm[i]);
    IntensityField f = field_from_basis(permuted, p, bw, grid);
    std::vector<double> s = s_values(f.rho_st, f.rho_sep, data.valid);
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(bm_permutation_replicate);

void bm_erl_measures(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Rng rng(4);
  Eigen::MatrixXd samples(m, 500);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < 500; ++j) samples(i, j) = rng.normal();
  RankMatrix ranks = pointwise_ranks(samples);
  for (auto _ : state) {
    Eigen::VectorXd meas = erl_measures(ranks);
    benchmark::DoNotOptimize(meas.data());
  }
}
BENCHMARK(bm_erl_measures)->Arg(100)->Arg(1000);

void bm_global_envelope(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Rng rng(5);
  Eigen::MatrixXd samples(m, 500);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < 500; ++j) samples(i, j) = rng.normal();
  for (auto _ : state) {
    Eigen::VectorXd meas = erl_measures(pointwise_ranks(samples));
    EnvelopeResult env = global_envelope(samples, meas, 0.05);
    benchmark::DoNotOptimize(env.p_value);
  }
}
BENCHMARK(bm_global_envelope)->Arg(100)->Arg(1000);

void bm_K_estimate(benchmark::State& state) {
  PointPattern p = uniform_pattern(static_cast<int>(state.range(0)), 6);
  LagGrid lag = make_lag_grid(0.25, 20, 0.25, 20);
  SetCovariance sc(p.window(), 0.25);
  std::vector<double> rho(p.size(), static_cast<double>(p.size()));
  for (auto _ : state) {
    Eigen::MatrixXd k = estimate_K_st(p, rho, lag, sc);
    benchmark::DoNotOptimize(k.data());
  }
}
BENCHMARK(bm_K_estimate)->Arg(300)->Arg(1000);

void bm_batch_energy(benchmark::State& state) {
  PointPattern p = uniform_pattern(300, 7);
  ReconConfig rc;
  rc.r_k = rc.t_k = 0.25;
  rc.r_d = rc.t_d = 0.125;
  rc.w_dk = 1.0;
  rc.w_delta = 1e-6;
  SummaryCache cache = build_summary_cache(p, rc);
  PointPattern q = uniform_pattern(300, 8);
  for (auto _ : state) {
    double e = energy(cache, q, rc);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(bm_batch_energy);

// Whole minimization runs, dominated by the incremental proposal loop.
void bm_reconstruct(benchmark::State& state) {
  PointPattern p = uniform_pattern(300, 9);
  ReconConfig rc;
  rc.r_k = rc.t_k = 0.25;
  rc.r_d = rc.t_d = 0.125;
  rc.w_dk = 1.0;
  rc.w_delta = 1e-6;
  rc.max_iter = state.range(0);
  rc.max_consecutive_rejects = static_cast<int>(state.range(0));
  SummaryCache cache = build_summary_cache(p, rc);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng rng(++seed);
    ReconResult res = reconstruct_cached(cache, rc, rng);
    benchmark::DoNotOptimize(res.proposals);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_reconstruct)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
