#include "stsep/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stsep/errors.hpp"
#include "stsep/quantile.hpp"

namespace stsep {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

void check_bandwidth(double b) {
  if (!(b > 0.0)) throw data_error("bandwidth must be positive");
}

// Index range [lo, hi) of sorted centers within cutoff*b of x.
std::pair<std::size_t, std::size_t> band(const std::vector<double>& centers,
                                         double x, double b) {
  const double r = kKernelCutoff * b;
  auto lo = std::lower_bound(centers.begin(), centers.end(), x - r);
  auto hi = std::upper_bound(centers.begin(), centers.end(), x + r);
  return {static_cast<std::size_t>(lo - centers.begin()),
          static_cast<std::size_t>(hi - centers.begin())};
}

}  // namespace

double gaussian_kernel(double v, double b) {
  check_bandwidth(b);
  if (std::abs(v) > kKernelCutoff * b) return 0.0;
  double z = v / b;
  return kInvSqrt2Pi / b * std::exp(-0.5 * z * z);
}

double gaussian_kernel(double vx, double vy, double b) {
  return gaussian_kernel(vx, b) * gaussian_kernel(vy, b);
}

QuadratureGrid make_quadrature_grid(const Window& w, int qnx, int qny) {
  if (qnx < 10 || qny < 10) throw data_error("insufficient quadrature grid");
  QuadratureGrid q;
  const Rect& b = w.bounding_box();
  q.dx = (b.xmax - b.xmin) / qnx;
  q.dy = (b.ymax - b.ymin) / qny;
  q.xs.resize(qnx);
  q.ys.resize(qny);
  for (int i = 0; i < qnx; ++i) q.xs[i] = b.xmin + (i + 0.5) * q.dx;
  for (int i = 0; i < qny; ++i) q.ys[i] = b.ymin + (i + 0.5) * q.dy;
  q.all_inside = w.is_rectangle();
  if (!q.all_inside) {
    q.inside.assign(static_cast<std::size_t>(qnx) * qny, 0);
    for (int iy = 0; iy < qny; ++iy)
      for (int ix = 0; ix < qnx; ++ix)
        q.inside[static_cast<std::size_t>(iy) * qnx + ix] =
            w.contains(q.xs[ix], q.ys[iy]) ? 1 : 0;
  }
  return q;
}

double edge_correction_space(double x, double y, double eps,
                             const QuadratureGrid& q) {
  check_bandwidth(eps);
  auto [x0, x1] = band(q.xs, x, eps);
  auto [y0, y1] = band(q.ys, y, eps);
  double sum = 0.0;
  if (q.all_inside) {
    // Rectangle: the integrand separates, so integrate each axis once.
    double sx = 0.0, sy = 0.0;
    for (std::size_t ix = x0; ix < x1; ++ix)
      sx += gaussian_kernel(q.xs[ix] - x, eps);
    for (std::size_t iy = y0; iy < y1; ++iy)
      sy += gaussian_kernel(q.ys[iy] - y, eps);
    sum = sx * sy;
  } else {
    std::vector<double> kx(x1 - x0);
    for (std::size_t ix = x0; ix < x1; ++ix)
      kx[ix - x0] = gaussian_kernel(q.xs[ix] - x, eps);
    const std::size_t qnx = q.xs.size();
    for (std::size_t iy = y0; iy < y1; ++iy) {
      double ky = gaussian_kernel(q.ys[iy] - y, eps);
      if (ky == 0.0) continue;
      const std::uint8_t* row = q.inside.data() + iy * qnx;
      double acc = 0.0;
      for (std::size_t ix = x0; ix < x1; ++ix)
        if (row[ix]) acc += kx[ix - x0];
      sum += ky * acc;
    }
  }
  double c = sum * q.dx * q.dy;
  if (!(c > 0.0))
    throw numeric_error("edge correction vanished; quadrature grid too coarse");
  return std::min(c, 1.0);
}

double edge_correction_space(double x, double y, const Window& w, double eps,
                             int qnx, int qny) {
  QuadratureGrid q = make_quadrature_grid(w, qnx, qny);
  return edge_correction_space(x, y, eps, q);
}

double edge_correction_time(double t, double t0, double t1, double delta,
                            int qnt) {
  check_bandwidth(delta);
  if (qnt < 10) throw data_error("insufficient quadrature grid");
  if (!(t1 > t0)) throw data_error("empty time interval");
  const double dt = (t1 - t0) / qnt;
  const double r = kKernelCutoff * delta;
  int lo = std::max(0, static_cast<int>(std::floor((t - r - t0) / dt)));
  int hi = std::min(qnt, static_cast<int>(std::ceil((t + r - t0) / dt)) + 1);
  double sum = 0.0;
  for (int i = lo; i < hi; ++i)
    sum += gaussian_kernel(t0 + (i + 0.5) * dt - t, delta);
  double c = sum * dt;
  if (!(c > 0.0))
    throw numeric_error("edge correction vanished; quadrature grid too coarse");
  return std::min(c, 1.0);
}

KernelBasis compute_kernel_basis(const PointPattern& p, const Bandwidths& bw,
                                 const Grid3& grid,
                                 const EstimateOptions& opt) {
  check_bandwidth(bw.space);
  check_bandwidth(bw.time);
  const std::size_t n = p.size();
  if (n == 0) throw data_error("empty pattern");
  if (opt.quad_refine < 1) throw data_error("quadrature refinement must be >= 1");

  const Window& w = p.window();
  QuadratureGrid quad =
      make_quadrature_grid(w, grid.nx * opt.quad_refine, grid.ny * opt.quad_refine);
  const int qnt = grid.nt * opt.quad_refine;

  KernelBasis basis;
  basis.spatial.setZero(grid.spatial_cells(), static_cast<Eigen::Index>(n));
  basis.temporal.setZero(static_cast<Eigen::Index>(n), grid.nt);
  basis.corr_space.resize(static_cast<Eigen::Index>(n));
  basis.corr_time.resize(static_cast<Eigen::Index>(n));

  std::vector<double> kx(grid.nx), ky(grid.ny);
  for (std::size_t i = 0; i < n; ++i) {
    const PointST& pt = p.points()[i];
    const double cw = edge_correction_space(pt.x, pt.y, bw.space, quad);
    const double ct =
        edge_correction_time(pt.t, w.t0(), w.t1(), bw.time, std::max(qnt, 10));
    basis.corr_space[static_cast<Eigen::Index>(i)] = cw;
    basis.corr_time[static_cast<Eigen::Index>(i)] = ct;

    for (int ix = 0; ix < grid.nx; ++ix)
      kx[ix] = gaussian_kernel(grid.xs[ix] - pt.x, bw.space);
    for (int iy = 0; iy < grid.ny; ++iy)
      ky[iy] = gaussian_kernel(grid.ys[iy] - pt.y, bw.space);
    double* col = basis.spatial.col(static_cast<Eigen::Index>(i)).data();
    for (int iy = 0; iy < grid.ny; ++iy) {
      if (ky[iy] == 0.0) continue;
      const double f = ky[iy] / cw;
      double* row = col + static_cast<std::size_t>(iy) * grid.nx;
      for (int ix = 0; ix < grid.nx; ++ix) row[ix] = kx[ix] * f;
    }
    for (int it = 0; it < grid.nt; ++it)
      basis.temporal(static_cast<Eigen::Index>(i), it) =
          gaussian_kernel(grid.ts[it] - pt.t, bw.time) / ct;
  }
  return basis;
}

IntensityField field_from_basis(const KernelBasis& basis, const PointPattern& p,
                                const Bandwidths& bw, const Grid3& grid) {
  IntensityField f;
  f.grid = grid;
  f.n = static_cast<int>(p.size());
  f.bw = bw;
  f.window_area = p.window().area();
  f.time_length = p.window().time_length();
  f.rho_space = basis.spatial.rowwise().sum();
  f.rho_time = basis.temporal.colwise().sum().transpose();
  f.rho_st = basis.spatial * basis.temporal;
  f.rho_sep = (f.rho_space * f.rho_time.transpose()) / static_cast<double>(f.n);
  f.mask_threshold = 1e-12 * f.n / (f.window_area * f.time_length);

  const int S = grid.spatial_cells();
  f.valid.assign(static_cast<std::size_t>(S) * grid.nt, 0);
  for (int it = 0; it < grid.nt; ++it) {
    const bool time_ok = f.rho_time[it] >= f.mask_threshold;
    for (int s = 0; s < S; ++s) {
      bool ok = time_ok && grid.spatial_inside[s] != 0 &&
                f.rho_space[s] >= f.mask_threshold &&
                f.rho_st(s, it) >= f.mask_threshold;
      f.valid[static_cast<std::size_t>(it) * S + s] = ok ? 1 : 0;
    }
  }
  return f;
}

Eigen::VectorXd estimate_rho_space(const PointPattern& p, double eps,
                                   const Grid3& grid,
                                   const EstimateOptions& opt) {
  check_bandwidth(eps);
  if (p.size() == 0) throw data_error("empty pattern");
  QuadratureGrid quad =
      make_quadrature_grid(p.window(), grid.nx * opt.quad_refine,
                           grid.ny * opt.quad_refine);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(grid.spatial_cells());
  std::vector<double> kx(grid.nx), ky(grid.ny);
  for (const PointST& pt : p.points()) {
    const double cw = edge_correction_space(pt.x, pt.y, eps, quad);
    for (int ix = 0; ix < grid.nx; ++ix)
      kx[ix] = gaussian_kernel(grid.xs[ix] - pt.x, eps);
    for (int iy = 0; iy < grid.ny; ++iy)
      ky[iy] = gaussian_kernel(grid.ys[iy] - pt.y, eps);
    for (int iy = 0; iy < grid.ny; ++iy) {
      if (ky[iy] == 0.0) continue;
      const double f = ky[iy] / cw;
      for (int ix = 0; ix < grid.nx; ++ix)
        rho[grid.spatial_index(ix, iy)] += kx[ix] * f;
    }
  }
  return rho;
}

Eigen::VectorXd estimate_rho_time(const PointPattern& p, double delta,
                                  const Grid3& grid,
                                  const EstimateOptions& opt) {
  check_bandwidth(delta);
  if (p.size() == 0) throw data_error("empty pattern");
  const Window& w = p.window();
  const int qnt = std::max(grid.nt * opt.quad_refine, 10);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(grid.nt);
  for (const PointST& pt : p.points()) {
    const double ct = edge_correction_time(pt.t, w.t0(), w.t1(), delta, qnt);
    for (int it = 0; it < grid.nt; ++it)
      rho[it] += gaussian_kernel(grid.ts[it] - pt.t, delta) / ct;
  }
  return rho;
}

IntensityField estimate_rho_st(const PointPattern& p, const Bandwidths& bw,
                               const Grid3& grid, const EstimateOptions& opt) {
  KernelBasis basis = compute_kernel_basis(p, bw, grid, opt);
  return field_from_basis(basis, p, bw, grid);
}

Eigen::MatrixXd estimate_rho_sep(const PointPattern& p, const Bandwidths& bw,
                                 const Grid3& grid,
                                 const EstimateOptions& opt) {
  Eigen::VectorXd rs = estimate_rho_space(p, bw.space, grid, opt);
  Eigen::VectorXd rt = estimate_rho_time(p, bw.time, grid, opt);
  return (rs * rt.transpose()) / static_cast<double>(p.size());
}

double IntensityField::mass_space() const {
  double m = 0.0;
  for (int s = 0; s < grid.spatial_cells(); ++s)
    if (grid.spatial_inside[s]) m += rho_space[s];
  return m * grid.cell_area();
}

double IntensityField::mass_time() const {
  return rho_time.sum() * grid.dt;
}

double IntensityField::mass_st() const {
  double m = 0.0;
  for (int it = 0; it < grid.nt; ++it)
    for (int s = 0; s < grid.spatial_cells(); ++s)
      if (grid.spatial_inside[s]) m += rho_st(s, it);
  return m * grid.cell_volume();
}

double IntensityField::mass_sep() const {
  double m = 0.0;
  for (int it = 0; it < grid.nt; ++it)
    for (int s = 0; s < grid.spatial_cells(); ++s)
      if (grid.spatial_inside[s]) m += rho_sep(s, it);
  return m * grid.cell_volume();
}

ConditionalField conditional_intensity(const IntensityField& field,
                                       ConditionalMode mode) {
  ConditionalField out;
  const int S = field.grid.spatial_cells();
  out.values.setZero(S, field.grid.nt);
  out.defined = field.valid;
  for (int it = 0; it < field.grid.nt; ++it) {
    for (int s = 0; s < S; ++s) {
      if (!field.cell_valid(s, it)) continue;
      double denom = mode == ConditionalMode::SpaceGivenTime
                         ? field.rho_time[it]
                         : field.rho_space[s];
      out.values(s, it) = field.rho_st(s, it) / denom;
    }
  }
  return out;
}

double rule_of_thumb_bandwidth(std::vector<double> values) {
  const std::size_t m = values.size();
  if (m < 10) throw data_error("insufficient sample for bandwidth selection");
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (m - 1));
  std::sort(values.begin(), values.end());
  double iqr =
      empirical_quantile(values, 0.75) - empirical_quantile(values, 0.25);
  double spread = std::numeric_limits<double>::infinity();
  if (sd > 0.0) spread = std::min(spread, sd);
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (!std::isfinite(spread))
    throw numeric_error("degenerate sample: zero spread");
  return 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
}

namespace {

// Leave-one-out log likelihood of the edge-corrected estimator for the
// time coordinate.
double cv_loglik_time(const std::vector<double>& ts, double t0, double t1,
                      double b) {
  const std::size_t n = ts.size();
  const double range = t1 - t0;
  const int qnt = std::min(50000, std::max(100, static_cast<int>(
                                               std::ceil(4.0 * range / b))));
  std::vector<double> corr(n);
  for (std::size_t j = 0; j < n; ++j)
    corr[j] = edge_correction_time(ts[j], t0, t1, b, qnt);
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      f += gaussian_kernel(ts[i] - ts[j], b) / corr[j];
    }
    ll += std::log(f / (n - 1));
  }
  return ll;
}

double cv_loglik_space(const PointPattern& p, double b) {
  const std::size_t n = p.size();
  const Window& w = p.window();
  const Rect& box = w.bounding_box();
  const double ex = box.xmax - box.xmin, ey = box.ymax - box.ymin;
  auto qdim = [&](double extent) {
    return std::min(2000, std::max(50, static_cast<int>(
                                       std::ceil(4.0 * extent / b))));
  };
  QuadratureGrid quad = make_quadrature_grid(w, qdim(ex), qdim(ey));
  std::vector<double> corr(n);
  for (std::size_t j = 0; j < n; ++j)
    corr[j] = edge_correction_space(p.points()[j].x, p.points()[j].y, b, quad);
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const PointST& pi = p.points()[i];
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const PointST& pj = p.points()[j];
      f += gaussian_kernel(pi.x - pj.x, pi.y - pj.y, b) / corr[j];
    }
    ll += std::log(f / (n - 1));
  }
  return ll;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g(count);
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) g[i] = lo * std::exp(step * i);
  return g;
}

}  // namespace

double select_bandwidth(const PointPattern& p, Axis axis,
                        BandwidthMethod method) {
  if (p.size() < 10)
    throw data_error("insufficient sample for bandwidth selection");
  if (method == BandwidthMethod::RuleOfThumb) {
    if (axis == Axis::Time) return rule_of_thumb_bandwidth(p.ts());
    return 0.5 * (rule_of_thumb_bandwidth(p.xs()) +
                  rule_of_thumb_bandwidth(p.ys()));
  }

  // Likelihood cross-validation over a 20-point log grid on
  // [range/200, range/2].
  double range;
  if (axis == Axis::Time) {
    auto ts = p.ts();
    auto [mn, mx] = std::minmax_element(ts.begin(), ts.end());
    range = *mx - *mn;
  } else {
    auto xs = p.xs();
    auto ys = p.ys();
    auto [xmn, xmx] = std::minmax_element(xs.begin(), xs.end());
    auto [ymn, ymx] = std::minmax_element(ys.begin(), ys.end());
    range = 0.5 * ((*xmx - *xmn) + (*ymx - *ymn));
  }
  if (!(range > 0.0)) throw numeric_error("degenerate sample: zero spread");

  std::vector<double> grid = log_grid(range / 200.0, range / 2.0, 20);
  double best_b = grid.front();
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double b : grid) {
    double ll = axis == Axis::Time
                    ? cv_loglik_time(p.ts(), p.window().t0(), p.window().t1(), b)
                    : cv_loglik_space(p, b);
    if (ll > best_ll) {
      best_ll = ll;
      best_b = b;
    }
  }
  if (!std::isfinite(best_ll))
    throw numeric_error("cross-validation likelihood degenerate");
  return best_b;
}

Bandwidths select_bandwidths(const PointPattern& p, BandwidthMethod method) {
  return Bandwidths{select_bandwidth(p, Axis::Space, method),
                    select_bandwidth(p, Axis::Time, method)};
}

}  // namespace stsep
