#include "stsep/sim.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "stsep/errors.hpp"

namespace stsep {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double v, double mean, double sd) {
  double z = (v - mean) / sd;
  return kInvSqrt2Pi / sd * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Mass of N(mean, sd) on [0, 1].
double unit_mass(double mean, double sd) {
  return normal_cdf((1.0 - mean) / sd) - normal_cdf((0.0 - mean) / sd);
}

double base_xi(const BurstModel& m, double x, double y) {
  if (m.base == BurstBase::SpaceNormal || m.base == BurstBase::Both)
    return normal_pdf(x, 0.5, m.base_sd) * normal_pdf(y, 0.5, m.base_sd);
  return 1.0;
}

double base_psi(const BurstModel& m, double t) {
  if (m.base == BurstBase::TimeNormal || m.base == BurstBase::Both)
    return normal_pdf(t, 0.5, m.base_sd);
  return 1.0;
}

void check_burst(const BurstModel& m) {
  if (!(m.nu > 0.0)) throw data_error("burst model needs nu > 0");
  if (m.gamma < 0.0 || m.gamma > 0.5 * m.nu)
    throw data_error("burst weight gamma must lie in [0, nu/2]");
  if (!(m.base_sd > 0.0) || !(m.burst_sd > 0.0))
    throw data_error("burst model standard deviations must be positive");
}

}  // namespace

double burst_intensity(const BurstModel& m, double x, double y, double t) {
  check_burst(m);
  double burst = normal_pdf(x, m.burst_mean[0], m.burst_sd) *
                 normal_pdf(y, m.burst_mean[1], m.burst_sd) *
                 normal_pdf(t, m.burst_mean[2], m.burst_sd);
  return (m.nu - m.gamma) * base_xi(m, x, y) * base_psi(m, t) +
         m.gamma * burst;
}

double burst_total_mass(const BurstModel& m) {
  check_burst(m);
  double xi = 1.0, psi = 1.0;
  if (m.base == BurstBase::SpaceNormal || m.base == BurstBase::Both) {
    double s = unit_mass(0.5, m.base_sd);
    xi = s * s;
  }
  if (m.base == BurstBase::TimeNormal || m.base == BurstBase::Both)
    psi = unit_mass(0.5, m.base_sd);
  double burst = unit_mass(m.burst_mean[0], m.burst_sd) *
                 unit_mass(m.burst_mean[1], m.burst_sd) *
                 unit_mass(m.burst_mean[2], m.burst_sd);
  return (m.nu - m.gamma) * xi * psi + m.gamma * burst;
}

BurstModel calibrate_burst(BurstBase base, double gamma, double target_count,
                           double base_sd, double burst_sd) {
  if (!(target_count > 0.0)) throw data_error("target count must be positive");
  BurstModel m;
  m.base = base;
  m.gamma = gamma;
  m.base_sd = base_sd;
  m.burst_sd = burst_sd;

  // Secant iteration on nu; the mass is affine in nu so this lands in
  // one step up to roundoff, but iterate defensively. The mass is
  // increasing in nu and nu >= 2*gamma is required, so a target below
  // the mass at that boundary is unreachable for this gamma.
  double lo = std::max(2.0 * gamma, 1e-6);
  m.nu = lo;
  if (burst_total_mass(m) > target_count)
    throw data_error("burst weight gamma must lie in [0, nu/2]");
  double nu0 = std::max(lo, target_count);
  double nu1 = nu0 + std::max(1.0, 0.1 * target_count);
  m.nu = nu0;
  double f0 = burst_total_mass(m) - target_count;
  for (int it = 0; it < 100 && std::abs(f0) > 1e-9 * target_count; ++it) {
    m.nu = nu1;
    double f1 = burst_total_mass(m) - target_count;
    if (f1 == f0) break;
    double next = nu1 - f1 * (nu1 - nu0) / (f1 - f0);
    nu0 = nu1;
    f0 = f1;
    nu1 = std::max(next, lo);
  }
  m.nu = nu0;
  if (std::abs(burst_total_mass(m) - target_count) > 1e-6 * target_count)
    throw numeric_error("burst calibration failed to converge");
  if (m.gamma > 0.5 * m.nu)
    throw data_error("burst weight gamma must lie in [0, nu/2]");
  return m;
}

double burst_max_intensity(const BurstModel& m) {
  check_burst(m);
  const int g = 64;
  double best = 0.0;
  for (int iz = 0; iz < g; ++iz)
    for (int iy = 0; iy < g; ++iy)
      for (int ix = 0; ix < g; ++ix)
        best = std::max(best, burst_intensity(m, (ix + 0.5) / g, (iy + 0.5) / g,
                                              (iz + 0.5) / g));
  // Candidate modes, in case the scan straddles a sharp peak.
  best = std::max(best, burst_intensity(m, m.burst_mean[0], m.burst_mean[1],
                                        m.burst_mean[2]));
  best = std::max(best, burst_intensity(m, 0.5, 0.5, 0.5));
  return 1.05 * best;
}

PointPattern simulate_thinned_poisson(const IntensityFn& rho, double rho_max,
                                      const Window& w, Rng& rng) {
  if (!(rho_max > 0.0)) throw data_error("dominating rate must be positive");
  const Rect& b = w.bounding_box();
  const int g = 32;
  const double sx = (b.xmax - b.xmin) / g, sy = (b.ymax - b.ymin) / g,
               st = w.time_length() / g;
  for (int iz = 0; iz < g; ++iz)
    for (int iy = 0; iy < g; ++iy)
      for (int ix = 0; ix < g; ++ix) {
        double x = b.xmin + (ix + 0.5) * sx, y = b.ymin + (iy + 0.5) * sy;
        if (!w.contains(x, y)) continue;
        if (rho(x, y, w.t0() + (iz + 0.5) * st) > rho_max)
          throw data_error("invalid dominating rate");
      }

  const long count = rng.poisson(rho_max * w.volume());
  std::vector<PointST> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    double x, y;
    do {
      x = rng.uniform(b.xmin, b.xmax);
      y = rng.uniform(b.ymin, b.ymax);
    } while (!w.contains(x, y));
    double t = rng.uniform(w.t0(), w.t1());
    double r = rho(x, y, t);
    if (r > rho_max * (1.0 + 1e-9))
      throw data_error("invalid dominating rate");
    if (rng.uniform() * rho_max < r) pts.push_back(PointST{x, y, t});
  }
  return PointPattern::unchecked(std::move(pts), w);
}

PointPattern simulate_burst(const BurstModel& m, Rng& rng) {
  check_burst(m);
  const Window cube = Window::unit_cube();
  const double rho_max = burst_max_intensity(m);
  return simulate_thinned_poisson(
      [&m](double x, double y, double t) { return burst_intensity(m, x, y, t); },
      rho_max, cube, rng);
}

Eigen::MatrixXd spatial_gaussian_cov(const Grid3& grid, double phi) {
  if (!(phi > 0.0)) throw data_error("covariance scale must be positive");
  const int S = grid.spatial_cells();
  Eigen::MatrixXd cov(S, S);
  for (int a = 0; a < S; ++a) {
    const double xa = grid.xs[a % grid.nx], ya = grid.ys[a / grid.nx];
    for (int b = 0; b <= a; ++b) {
      const double dx = xa - grid.xs[b % grid.nx];
      const double dy = ya - grid.ys[b / grid.nx];
      const double v = std::exp(-(dx * dx + dy * dy) / phi);
      cov(a, b) = v;
      cov(b, a) = v;
    }
  }
  return cov;
}

Eigen::MatrixXd temporal_exponential_cov(const Grid3& grid, double phi) {
  if (!(phi > 0.0)) throw data_error("covariance scale must be positive");
  const int T = grid.nt;
  Eigen::MatrixXd cov(T, T);
  for (int a = 0; a < T; ++a)
    for (int b = 0; b <= a; ++b) {
      const double v = std::exp(-std::abs(grid.ts[a] - grid.ts[b]) / phi);
      cov(a, b) = v;
      cov(b, a) = v;
    }
  return cov;
}

Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd cov, double jitter) {
  cov.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw numeric_error("covariance factorization failed");
  return llt.matrixL();
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd simulate_grf_prefactored(const Eigen::MatrixXd& l1,
                                         const Eigen::MatrixXd& l2, Rng& rng) {
  Eigen::MatrixXd xi(l1.rows(), l2.rows());
  for (Eigen::Index j = 0; j < xi.cols(); ++j)
    for (Eigen::Index i = 0; i < xi.rows(); ++i) xi(i, j) = rng.normal();
  return l1 * xi * l2.transpose();
}

Eigen::MatrixXd simulate_grf_kronecker(const Eigen::MatrixXd& cov1,
                                       const Eigen::MatrixXd& cov2, Rng& rng) {
  return simulate_grf_prefactored(cholesky_with_jitter(cov1),
                                  cholesky_with_jitter(cov2), rng);
}

LgcpFactors make_lgcp_factors(const LgcpModel& m, const Window& w) {
  if (m.nx < 1 || m.ny < 1 || m.nt < 1)
    throw data_error("grid dims must be >= 1");
  LgcpFactors f;
  f.grid = build_grid(w, m.nx, m.ny, m.nt);
  f.l_space = cholesky_with_jitter(spatial_gaussian_cov(f.grid, m.phi1));
  f.l_time = cholesky_with_jitter(temporal_exponential_cov(f.grid, m.phi2));
  return f;
}

LgcpRealization simulate_lgcp(const LgcpModel& m, const Window& w, Rng& rng,
                              const LgcpFactors* factors) {
  LgcpFactors local;
  if (!factors) {
    local = make_lgcp_factors(m, w);
    factors = &local;
  }
  const Grid3& grid = factors->grid;
  const int S = grid.spatial_cells(), T = grid.nt;

  Eigen::VectorXd zs(S), zt(T);
  {
    Eigen::VectorXd xi(S);
    for (int i = 0; i < S; ++i) xi[i] = rng.normal();
    zs = factors->l_space * xi;
  }
  {
    Eigen::VectorXd xi(T);
    for (int i = 0; i < T; ++i) xi[i] = rng.normal();
    zt = factors->l_time * xi;
  }
  Eigen::MatrixXd zst =
      simulate_grf_prefactored(factors->l_space, factors->l_time, rng);

  Eigen::MatrixXd log_lambda(S, T);
  for (int it = 0; it < T; ++it) {
    const double t = grid.ts[it];
    for (int s = 0; s < S; ++s) {
      const double x = grid.xs[s % grid.nx];
      const double mean =
          m.beta0 + m.beta1 * (x - t) + m.gamma_prime * x * t;
      log_lambda(s, it) = mean + m.sigma1 * zs[s] + m.sigma2 * zt[it] +
                          m.gamma_dprime * zst(s, it);
    }
  }
  Eigen::MatrixXd lambda = log_lambda.array().exp();
  PointPattern pattern = sample_poisson_on_grid(grid, lambda, w, rng);
  return LgcpRealization{std::move(pattern), std::move(log_lambda), grid};
}

PointPattern sample_poisson_on_grid(const Grid3& grid,
                                    const Eigen::MatrixXd& lambda,
                                    const Window& w, Rng& rng) {
  if (lambda.rows() != grid.spatial_cells() || lambda.cols() != grid.nt)
    throw data_error("intensity grid shape mismatch");
  const double vol = grid.cell_volume();
  std::vector<PointST> pts;
  for (int it = 0; it < grid.nt; ++it) {
    for (int s = 0; s < grid.spatial_cells(); ++s) {
      if (!grid.spatial_inside[s]) continue;
      const double mean = lambda(s, it) * vol;
      if (!(mean >= 0.0)) throw data_error("negative intensity");
      long count = rng.poisson(mean);
      const double cx = grid.xs[s % grid.nx], cy = grid.ys[s / grid.nx];
      for (long i = 0; i < count; ++i) {
        double x, y;
        int tries = 0;
        do {
          x = cx + (rng.uniform() - 0.5) * grid.dx;
          y = cy + (rng.uniform() - 0.5) * grid.dy;
        } while (!w.contains(x, y) && ++tries < 10000);
        if (tries >= 10000) {
          x = cx;
          y = cy;
        }
        const double t = grid.ts[it] + (rng.uniform() - 0.5) * grid.dt;
        pts.push_back(PointST{x, y, t});
      }
    }
  }
  return PointPattern::unchecked(std::move(pts), w);
}

}  // namespace stsep
