#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>

#include "stsep/geometry.hpp"
#include "stsep/rng.hpp"

namespace stsep {

// Base (separable) intensity shape of the burst model on the unit cube.
enum class BurstBase {
  Uniform,      // xi = psi = 1
  TimeNormal,   // psi = N(0.5, base_sd) density
  SpaceNormal,  // xi = N2((0.5, 0.5), base_sd^2 I) density
  Both,
};

// rho(u, t) = (nu - gamma) xi(u) psi(t) + gamma phi(u, t) on [0,1]^3,
// phi a trivariate normal burst.
struct BurstModel {
  BurstBase base = BurstBase::Uniform;
  double nu = 600.0;
  double gamma = 0.0;
  double base_sd = 0.2;
  std::array<double, 3> burst_mean{0.3, 0.3, 0.2};
  double burst_sd = 0.05;
};

double burst_intensity(const BurstModel& m, double x, double y, double t);

// Exact integral of the intensity over the unit cube (normal masses).
double burst_total_mass(const BurstModel& m);

// Solves nu so that the total mass hits target_count, then validates
// gamma in [0, nu/2].
BurstModel calibrate_burst(BurstBase base, double gamma,
                           double target_count = 600.0, double base_sd = 0.2,
                           double burst_sd = 0.05);

// Grid-scan supremum with 5% headroom, suitable as a dominating rate.
double burst_max_intensity(const BurstModel& m);

using IntensityFn = std::function<double(double, double, double)>;

// Inhomogeneous Poisson sampling by thinning a homogeneous Poisson
// process of rate rho_max. A grid scan (and every thinning draw)
// validates rho <= rho_max.
PointPattern simulate_thinned_poisson(const IntensityFn& rho, double rho_max,
                                      const Window& w, Rng& rng);

PointPattern simulate_burst(const BurstModel& m, Rng& rng);

// Log-Gaussian Cox process on a grid: Lambda = exp(m + Z) with
// m(u, t) = beta0 + beta1 (x - t) + gamma_prime x t and
// Z = sigma1 Z_s(u) + sigma2 Z_t(t) + gamma_dprime Z_st(u, t), the three
// unit-variance Gaussian fields with covariances
// C1 = exp(-||u1-u2||^2 / phi1), C2 = exp(-|t1-t2| / phi2), C3 = C1 C2.
struct LgcpModel {
  double beta0 = 5.05;
  double beta1 = 0.25;
  double gamma_prime = 0.0;
  double gamma_dprime = 0.0;
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  double phi1 = 0.06;
  double phi2 = 0.05;
  int nx = 20, ny = 20, nt = 20;
};

Eigen::MatrixXd spatial_gaussian_cov(const Grid3& grid, double phi);
Eigen::MatrixXd temporal_exponential_cov(const Grid3& grid, double phi);

// Lower Cholesky factor of cov + jitter*I.
Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd cov,
                                     double jitter = 1e-10);

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Zero-mean field with covariance C(s,s')*C(t,t') sampled through the
// factor identity chol(C1 (x) C2) = chol(C1) (x) chol(C2): the returned
// S x T matrix is L1 * Xi * L2^T with Xi iid standard normal.
Eigen::MatrixXd simulate_grf_kronecker(const Eigen::MatrixXd& cov1,
                                       const Eigen::MatrixXd& cov2, Rng& rng);
Eigen::MatrixXd simulate_grf_prefactored(const Eigen::MatrixXd& l1,
                                         const Eigen::MatrixXd& l2, Rng& rng);

// Factor cache for repeated simulation of one model.
struct LgcpFactors {
  Grid3 grid;
  Eigen::MatrixXd l_space;  // S x S
  Eigen::MatrixXd l_time;   // T x T
};

LgcpFactors make_lgcp_factors(const LgcpModel& m, const Window& w);

struct LgcpRealization {
  PointPattern pattern;
  Eigen::MatrixXd log_lambda;  // S x T on grid centers
  Grid3 grid;
};

LgcpRealization simulate_lgcp(const LgcpModel& m, const Window& w, Rng& rng,
                              const LgcpFactors* factors = nullptr);

// Piecewise-constant Poisson sampling: per-cell counts at rate
// lambda * cell volume, uniform placement within the cell.
PointPattern sample_poisson_on_grid(const Grid3& grid,
                                    const Eigen::MatrixXd& lambda,
                                    const Window& w, Rng& rng);

}  // namespace stsep
