#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "stsep/geometry.hpp"
#include "stsep/kernels.hpp"
#include "stsep/permutation.hpp"
#include "stsep/rng.hpp"

namespace stsep {

// Midpoint lag grid on (0, r_max] x (0, t_max]; energy integrals are
// midpoint sums of staircase summaries evaluated at these lags.
struct LagGrid {
  std::vector<double> r, t;
  double dr = 0.0, dt = 0.0;
};

LagGrid make_lag_grid(double r_max, int nr, double t_max, int nt);

// |W n (W + h)| as a function of the spatial lag h. Exact product form
// for rectangles; for polygons a sampled lag table with bilinear lookup.
class SetCovariance {
 public:
  SetCovariance(const Window& w, double max_lag);
  double operator()(double hx, double hy) const;

 private:
  bool rect_ = true;
  double lx_ = 1.0, ly_ = 1.0;
  double max_lag_ = 0.0, step_ = 0.0;
  int half_ = 0;  // polygon table is (2*half_+1)^2
  std::vector<double> table_;
};

// Kernel edge corrections for the reconstruction energy: closed-form
// Gaussian-mass products on rectangles, a bilinear table on polygons.
// Both the data summaries and every candidate use the same tables, so
// the energy compares like with like.
class EdgeTables {
 public:
  EdgeTables(const Window& w, const Bandwidths& bw, int qnx, int qny);
  double space(double x, double y) const;  // C_W(u), in (0, 1]
  double time(double t) const;             // C_T(t), in (0, 1]

 private:
  bool rect_ = true;
  Rect bbox_;
  double t0_ = 0.0, t1_ = 1.0;
  Bandwidths bw_;
  int qnx_ = 0, qny_ = 0;
  std::vector<double> xs_, ys_;
  std::vector<double> table_;  // qnx*qny, row-major (ix, iy); polygons only
};

struct ReconConfig {
  double w_k = 1.0;
  double w_dk = 3e3;
  double w_delta = 4e5;
  double t_k = 12.0, r_k = 6.0;  // K-term integration bounds
  double t_d = 6.0, r_d = 3.0;   // D-term integration bounds
  int k_max = 3;
  int lag_nr = 20, lag_nt = 20;
  int nx = 25, ny = 25, nt = 20;  // grid for the intensity term
  std::optional<Bandwidths> bandwidths;
  BandwidthMethod bw_method = BandwidthMethod::RuleOfThumb;
  long max_iter = 100000;
  int max_consecutive_rejects = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  EstimateOptions estimate;
};

// Everything about the data pattern the minimization loop reads:
// target summaries, the separable intensity surface, the sampling
// density, and the shared correction machinery.
struct SummaryCache {
  Window window = Window::unit_cube();
  int n = 0;
  Bandwidths bw;
  LagGrid lag_k, lag_d;
  Eigen::MatrixXd k_hat;             // lag_nr x lag_nt
  std::vector<Eigen::MatrixXd> d_k;  // k = 1..k_max
  Grid3 grid;                        // intensity-term grid
  Eigen::MatrixXd rho_sep;           // S x T, recon correction scheme
  Eigen::VectorXd inside_mask;       // S, 1 when cell center in W
  Eigen::MatrixXd surface;           // data rho_st, K-weight lookup
  std::vector<std::uint8_t> valid;   // frozen mask, s + S*it
  Eigen::MatrixXd density;           // sampling density on valid cells
  std::shared_ptr<const SetCovariance> setcov;
  std::shared_ptr<const EdgeTables> edges;
};

SummaryCache build_summary_cache(const PointPattern& x,
                                 const ReconConfig& cfg);

// Cached data-intensity values at arbitrary points (nearest grid cell),
// the same lookup the energy applies to candidate patterns.
std::vector<double> surface_intensity(const SummaryCache& cache,
                                      const std::vector<PointST>& pts);

// Translation-corrected inhomogeneous space-time K, evaluated as a
// staircase at the lag-grid values: each ordered pair with spatial
// distance <= r and |time lag| <= t contributes
// 1 / (rho_i rho_j w_ij |W x T|), w_ij = |W n W_h| (|T| - |dt|) / (|W||T|).
Eigen::MatrixXd estimate_K_st(const PointPattern& p,
                              const std::vector<double>& rho_at_points,
                              const LagGrid& lag, const SetCovariance& sc);
Eigen::MatrixXd estimate_K_st(const PointPattern& p,
                              const std::vector<double>& rho_at_points,
                              const LagGrid& lag);

// D_k(r, t) = fraction of points with at least k neighbours within
// spatial distance r and time lag t.
std::vector<Eigen::MatrixXd> estimate_Dk(const PointPattern& p, int k_max,
                                         const LagGrid& lag);

// E = w_k II (sqrt(K_X) - sqrt(K_Y))^2 + sum_k w_dk II (D_k,X - D_k,Y)^2
//   + w_delta sum_cells vol (rho_sep,X - rho_sep,Y)^2,
// lag integrals as midpoint sums over [0,r_k]x[0,t_k] and [0,r_d]x[0,t_d].
double energy(const SummaryCache& cache, const PointPattern& y,
              const ReconConfig& cfg);

// Exactly n independent draws from the density grid restricted to W:
// cell by cumulative weight, uniform within the cell.
PointPattern sample_binomial_from_density(int n, const Grid3& grid,
                                          const Eigen::MatrixXd& density,
                                          const Window& w, Rng& rng);

struct ReconResult {
  PointPattern pattern;
  // E(Y_0) followed by the energy after each accepted proposal.
  std::vector<double> accepted_energies;
  long proposals = 0;
  long accepted = 0;
};

// Replace-one-point minimization: delete a uniform point, insert a fresh
// draw from the separable density, accept iff the energy does not
// increase; stops after max_iter proposals or max_consecutive_rejects
// rejections in a row. y0 overrides the binomial initial pattern.
ReconResult reconstruct_cached(const SummaryCache& cache,
                               const ReconConfig& cfg, Rng& rng,
                               const PointPattern* y0 = nullptr);
ReconResult reconstruct(const PointPattern& x, const ReconConfig& cfg,
                        Rng& rng);

// Monte Carlo separability test with independent reconstructions in the
// place of time permutations; statistic machinery and mask handling are
// identical to run_permutation_test.
MonteCarloTestResult run_reconstruction_test(const PointPattern& p,
                                             const ReconConfig& recon_cfg,
                                             const PermTestConfig& test_cfg);

}  // namespace stsep
