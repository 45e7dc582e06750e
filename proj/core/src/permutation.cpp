#include "stsep/permutation.hpp"

#include <numeric>

#include "stsep/errors.hpp"
#include "stsep/parallel.hpp"

namespace stsep {

std::vector<std::uint32_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  rng.shuffle(idx);
  return idx;
}

PointPattern permute_times(const PointPattern& p, Rng& rng) {
  const std::size_t n = p.size();
  if (n < 1) throw data_error("empty pattern");
  std::vector<std::uint32_t> perm = random_permutation(n, rng);
  std::vector<PointST> pts = p.points();
  for (std::size_t i = 0; i < n; ++i) pts[i].t = p.points()[perm[i]].t;
  return PointPattern::unchecked(std::move(pts), p.window());
}

namespace {

bool uses_envelope(Statistic s) { return s != Statistic::SDev; }

}  // namespace

std::vector<MonteCarloTestResult> run_permutation_battery(
    const PointPattern& p, const PermTestConfig& cfg,
    const std::vector<Statistic>& stats) {
  if (stats.empty()) throw data_error("no statistics requested");
  if (cfg.n_perm < 1) throw data_error("need at least one permutation");
  if (p.size() < 2) throw data_error("need at least two points");

  const Bandwidths bw = cfg.bandwidths
                            ? *cfg.bandwidths
                            : select_bandwidths(p, cfg.bw_method);
  const Grid3 grid = build_grid(p.window(), cfg.nx, cfg.ny, cfg.nt);
  const KernelBasis basis = compute_kernel_basis(p, bw, grid, cfg.estimate);
  const IntensityField field = field_from_basis(basis, p, bw, grid);

  const int m = cfg.n_perm + 1;
  const std::size_t n = p.size();

  // One sample matrix per statistic, row 0 = data.
  std::vector<Eigen::MatrixXd> samples(stats.size());
  for (std::size_t k = 0; k < stats.size(); ++k) {
    std::vector<double> row0 = statistic_values(stats[k], field.rho_st, field.rho_sep, field.valid, grid);
    samples[k].resize(m, static_cast<Eigen::Index>(row0.size()));
    for (std::size_t j = 0; j < row0.size(); ++j)
      samples[k](0, static_cast<Eigen::Index>(j)) = row0[j];
  }

  parallel_for(static_cast<std::size_t>(cfg.n_perm), cfg.threads,
               [&](std::size_t r) {
                 Rng rng = Rng::for_replicate(cfg.seed, r + 1);
                 std::vector<std::uint32_t> perm = random_permutation(n, rng);
                 Eigen::MatrixXd bp(basis.temporal.rows(),
                                    basis.temporal.cols());
                 for (std::size_t i = 0; i < n; ++i)
                   bp.row(static_cast<Eigen::Index>(i)) =
                       basis.temporal.row(perm[i]);
                 const Eigen::MatrixXd rho = basis.spatial * bp;
                 for (std::size_t k = 0; k < stats.size(); ++k) {
                   std::vector<double> vals =
                       statistic_values(stats[k], rho, field.rho_sep, field.valid, grid);
                   for (std::size_t j = 0; j < vals.size(); ++j)
                     samples[k](static_cast<Eigen::Index>(r + 1),
                                static_cast<Eigen::Index>(j)) = vals[j];
                 }
               });

  std::vector<MonteCarloTestResult> out(stats.size());
  for (std::size_t k = 0; k < stats.size(); ++k) {
    MonteCarloTestResult& res = out[k];
    res.statistic = stats[k];
    res.alpha = cfg.alpha;
    res.n_perm = cfg.n_perm;
    res.seed = cfg.seed;
    res.grid_dims = {cfg.nx, cfg.ny, cfg.nt};
    res.bandwidths = bw;
    res.data_sample = statistic_sample(stats[k], field);
    if (uses_envelope(stats[k])) {
      Eigen::VectorXd measures = erl_measures(pointwise_ranks(samples[k]));
      res.envelope = global_envelope(samples[k], measures, cfg.alpha);
      res.p_value = res.envelope->p_value;
    } else {
      res.deviation_stats.resize(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) res.deviation_stats[i] = samples[k](i, 0);
      res.p_value = deviation_pvalue(res.deviation_stats, 0);
    }
  }
  return out;
}

MonteCarloTestResult run_permutation_test(const PointPattern& p,
                                           const PermTestConfig& cfg) {
  return run_permutation_battery(p, cfg, {cfg.statistic})[0];
}

}  // namespace stsep
