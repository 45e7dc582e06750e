#include "stsep/recon.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stsep/errors.hpp"
#include "stsep/parallel.hpp"
#include "stsep/stats.hpp"

namespace stsep {

namespace {

// Mass of N(center, b^2) on [lo, hi].
double normal_mass(double lo, double hi, double center, double b) {
  const double inv = 1.0 / (b * std::sqrt(2.0));
  return 0.5 * (std::erf((hi - center) * inv) - std::erf((lo - center) * inv));
}

// First lag-grid index whose lag value covers d (staircase convention:
// a pair at distance d is counted at every lag >= d).
int lag_index(const std::vector<double>& lags, double d) {
  return static_cast<int>(std::lower_bound(lags.begin(), lags.end(), d) -
                          lags.begin());
}

// Cell containing (x, y, t); grid cells tile the bounding box exactly.
double surface_at(const Grid3& g, const Eigen::MatrixXd& surface, double x,
                  double y, double t) {
  const double x0 = g.xs.front() - 0.5 * g.dx;
  const double y0 = g.ys.front() - 0.5 * g.dy;
  const double t0 = g.ts.front() - 0.5 * g.dt;
  const int ix =
      std::clamp(static_cast<int>(std::floor((x - x0) / g.dx)), 0, g.nx - 1);
  const int iy =
      std::clamp(static_cast<int>(std::floor((y - y0) / g.dy)), 0, g.ny - 1);
  const int it =
      std::clamp(static_cast<int>(std::floor((t - t0) / g.dt)), 0, g.nt - 1);
  return surface(g.spatial_index(ix, iy), it);
}

std::vector<double> surface_at_points(const Grid3& g,
                                      const Eigen::MatrixXd& surface,
                                      const std::vector<PointST>& pts) {
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    out[i] = surface_at(g, surface, pts[i].x, pts[i].y, pts[i].t);
  return out;
}

void validate_config(const ReconConfig& cfg) {
  if (cfg.w_k < 0.0 || cfg.w_dk < 0.0 || cfg.w_delta < 0.0)
    throw data_error("weights must be nonnegative");
  if (!(cfg.w_k + cfg.w_dk + cfg.w_delta > 0.0))
    throw data_error("at least one weight must be positive");
  if (!(cfg.t_k > 0.0) || !(cfg.r_k > 0.0) || !(cfg.t_d > 0.0) ||
      !(cfg.r_d > 0.0))
    throw data_error("integration bounds must be positive");
  if (cfg.k_max < 1) throw data_error("k_max must be >= 1");
  if (cfg.lag_nr < 1 || cfg.lag_nt < 1)
    throw data_error("lag grid dims must be >= 1");
  if (cfg.nx < 1 || cfg.ny < 1 || cfg.nt < 1)
    throw data_error("grid dims must be >= 1");
  if (cfg.max_iter < 0) throw data_error("max_iter must be >= 0");
  if (cfg.max_consecutive_rejects < 1)
    throw data_error("max_consecutive_rejects must be >= 1");
}

// Corrected kernel profile of one point on the grid axes.
Eigen::VectorXd spatial_column(const Grid3& g, const EdgeTables& e, double eps,
                               double x, double y) {
  Eigen::VectorXd col(g.spatial_cells());
  const double c = e.space(x, y);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      col[g.spatial_index(ix, iy)] =
          gaussian_kernel(g.xs[ix] - x, g.ys[iy] - y, eps) / c;
  return col;
}

Eigen::VectorXd temporal_row(const Grid3& g, const EdgeTables& e, double delta,
                             double t) {
  Eigen::VectorXd row(g.nt);
  const double c = e.time(t);
  for (int it = 0; it < g.nt; ++it)
    row[it] = gaussian_kernel(g.ts[it] - t, delta) / c;
  return row;
}

// Draws single points from a nonnegative density grid restricted to W.
class DensitySampler {
 public:
  DensitySampler(const Grid3& grid, const Eigen::MatrixXd& density,
                 const Window& w)
      : grid_(grid), w_(w) {
    const int S = grid.spatial_cells(), T = grid.nt;
    if (density.rows() != S || density.cols() != T)
      throw data_error("density grid shape mismatch");
    cdf_.resize(static_cast<std::size_t>(S) * T);
    double total = 0.0;
    for (int it = 0; it < T; ++it)
      for (int s = 0; s < S; ++s) {
        double v = density(s, it);
        if (v < 0.0 || !std::isfinite(v))
          throw data_error("invalid density value");
        if (!grid.spatial_inside[s]) v = 0.0;
        total += v;
        cdf_[static_cast<std::size_t>(it) * S + s] = total;
      }
    if (!(total > 0.0)) throw data_error("zero total density");
    total_ = total;
  }

  PointST draw(Rng& rng) const {
    const int S = grid_.spatial_cells();
    for (;;) {
      const double u = rng.uniform() * total_;
      std::size_t idx = static_cast<std::size_t>(
          std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
      if (idx >= cdf_.size()) idx = cdf_.size() - 1;
      const int s = static_cast<int>(idx % S);
      const int it = static_cast<int>(idx / S);
      PointST p;
      p.x = grid_.xs[s % grid_.nx] + (rng.uniform() - 0.5) * grid_.dx;
      p.y = grid_.ys[s / grid_.nx] + (rng.uniform() - 0.5) * grid_.dy;
      p.t = grid_.ts[it] + (rng.uniform() - 0.5) * grid_.dt;
      if (w_.contains(p.x, p.y)) return p;
    }
  }

 private:
  const Grid3& grid_;
  const Window& w_;
  std::vector<double> cdf_;
  double total_ = 0.0;
};

}  // namespace

LagGrid make_lag_grid(double r_max, int nr, double t_max, int nt) {
  if (!(r_max > 0.0) || !(t_max > 0.0))
    throw data_error("lag bounds must be positive");
  if (nr < 1 || nt < 1) throw data_error("lag grid dims must be >= 1");
  LagGrid g;
  g.dr = r_max / nr;
  g.dt = t_max / nt;
  g.r.resize(nr);
  g.t.resize(nt);
  for (int a = 0; a < nr; ++a) g.r[a] = (a + 0.5) * g.dr;
  for (int b = 0; b < nt; ++b) g.t[b] = (b + 0.5) * g.dt;
  return g;
}

SetCovariance::SetCovariance(const Window& w, double max_lag) {
  if (!(max_lag > 0.0)) throw data_error("max lag must be positive");
  const Rect& b = w.bounding_box();
  lx_ = b.xmax - b.xmin;
  ly_ = b.ymax - b.ymin;
  rect_ = w.is_rectangle();
  if (rect_) return;

  // Square indicator cells; lag-table nodes sit on integer cell shifts
  // so each table value is an exact discrete correlation.
  const double extent = std::max(lx_, ly_);
  const double cell = extent / 384.0;
  const int qx = static_cast<int>(std::ceil(lx_ / cell));
  const int qy = static_cast<int>(std::ceil(ly_ / cell));
  const int shift = std::max(1, static_cast<int>(std::lround(
                                    max_lag / (20.0 * cell))));
  step_ = shift * cell;
  half_ = static_cast<int>(std::ceil(max_lag / step_)) + 1;
  max_lag_ = max_lag;

  std::vector<std::uint8_t> ind(static_cast<std::size_t>(qx) * qy);
  for (int j = 0; j < qy; ++j)
    for (int i = 0; i < qx; ++i)
      ind[static_cast<std::size_t>(j) * qx + i] =
          w.contains(b.xmin + (i + 0.5) * cell, b.ymin + (j + 0.5) * cell)
              ? 1
              : 0;

  const int side = 2 * half_ + 1;
  table_.assign(static_cast<std::size_t>(side) * side, 0.0);
  for (int bb = 0; bb <= half_; ++bb)
    for (int aa = -half_; aa <= half_; ++aa) {
      if (bb == 0 && aa < 0) continue;  // symmetry S(-h) = S(h)
      const int di = aa * shift, dj = bb * shift;
      const int i0 = std::max(0, -di), i1 = std::min(qx, qx - di);
      const int j0 = std::max(0, -dj), j1 = std::min(qy, qy - dj);
      long count = 0;
      for (int j = j0; j < j1; ++j) {
        const std::uint8_t* row = ind.data() + static_cast<std::size_t>(j) * qx;
        const std::uint8_t* row2 =
            ind.data() + static_cast<std::size_t>(j + dj) * qx + di;
        for (int i = i0; i < i1; ++i) count += row[i] & row2[i];
      }
      const double v = static_cast<double>(count) * cell * cell;
      table_[static_cast<std::size_t>(bb + half_) * side + (aa + half_)] = v;
      table_[static_cast<std::size_t>(half_ - bb) * side + (half_ - aa)] = v;
    }
}

double SetCovariance::operator()(double hx, double hy) const {
  if (rect_) {
    const double ox = lx_ - std::abs(hx), oy = ly_ - std::abs(hy);
    return (ox > 0.0 && oy > 0.0) ? ox * oy : 0.0;
  }
  const int side = 2 * half_ + 1;
  const double u = std::clamp(hx / step_ + half_, 0.0, side - 1.0);
  const double v = std::clamp(hy / step_ + half_, 0.0, side - 1.0);
  const int iu = std::min(static_cast<int>(u), side - 2);
  const int iv = std::min(static_cast<int>(v), side - 2);
  const double fu = u - iu, fv = v - iv;
  const auto at = [&](int a, int b) {
    return table_[static_cast<std::size_t>(b) * side + a];
  };
  return (1 - fu) * (1 - fv) * at(iu, iv) + fu * (1 - fv) * at(iu + 1, iv) +
         (1 - fu) * fv * at(iu, iv + 1) + fu * fv * at(iu + 1, iv + 1);
}

EdgeTables::EdgeTables(const Window& w, const Bandwidths& bw, int qnx,
                       int qny) {
  if (!(bw.space > 0.0) || !(bw.time > 0.0))
    throw data_error("bandwidth must be positive");
  rect_ = w.is_rectangle();
  bbox_ = w.bounding_box();
  t0_ = w.t0();
  t1_ = w.t1();
  bw_ = bw;
  if (rect_) return;

  const QuadratureGrid q = make_quadrature_grid(w, qnx, qny);
  qnx_ = static_cast<int>(q.xs.size());
  qny_ = static_cast<int>(q.ys.size());
  xs_ = q.xs;
  ys_ = q.ys;
  table_.assign(static_cast<std::size_t>(qnx_) * qny_, 0.0);
  const double cut = kKernelCutoff * bw.space;
  const double da = q.dx * q.dy;
  for (int iy = 0; iy < qny_; ++iy)
    for (int ix = 0; ix < qnx_; ++ix) {
      const double x = xs_[ix], y = ys_[iy];
      const int jx0 = std::max(
          0, static_cast<int>(std::floor((x - cut - xs_[0]) / q.dx)));
      const int jx1 = std::min(
          qnx_ - 1, static_cast<int>(std::ceil((x + cut - xs_[0]) / q.dx)));
      const int jy0 = std::max(
          0, static_cast<int>(std::floor((y - cut - ys_[0]) / q.dy)));
      const int jy1 = std::min(
          qny_ - 1, static_cast<int>(std::ceil((y + cut - ys_[0]) / q.dy)));
      double acc = 0.0;
      for (int jy = jy0; jy <= jy1; ++jy) {
        if (!q.all_inside) {
          const std::uint8_t* row =
              q.inside.data() + static_cast<std::size_t>(jy) * qnx_;
          for (int jx = jx0; jx <= jx1; ++jx) {
            if (!row[jx]) continue;
            acc += gaussian_kernel(xs_[jx] - x, ys_[jy] - y, bw.space);
          }
        } else {
          for (int jx = jx0; jx <= jx1; ++jx)
            acc += gaussian_kernel(xs_[jx] - x, ys_[jy] - y, bw.space);
        }
      }
      table_[static_cast<std::size_t>(iy) * qnx_ + ix] =
          std::min(acc * da, 1.0);
    }
}

double EdgeTables::space(double x, double y) const {
  if (rect_) {
    const double mx = normal_mass(bbox_.xmin, bbox_.xmax, x, bw_.space);
    const double my = normal_mass(bbox_.ymin, bbox_.ymax, y, bw_.space);
    return std::max(mx * my, 1e-300);
  }
  const double dx = xs_[1] - xs_[0], dy = ys_[1] - ys_[0];
  const double u = std::clamp((x - xs_[0]) / dx, 0.0, qnx_ - 1.0);
  const double v = std::clamp((y - ys_[0]) / dy, 0.0, qny_ - 1.0);
  const int iu = std::min(static_cast<int>(u), qnx_ - 2);
  const int iv = std::min(static_cast<int>(v), qny_ - 2);
  const double fu = u - iu, fv = v - iv;
  const auto at = [&](int a, int b) {
    return table_[static_cast<std::size_t>(b) * qnx_ + a];
  };
  const double c = (1 - fu) * (1 - fv) * at(iu, iv) +
                   fu * (1 - fv) * at(iu + 1, iv) +
                   (1 - fu) * fv * at(iu, iv + 1) + fu * fv * at(iu + 1, iv + 1);
  return std::max(c, 1e-300);
}

double EdgeTables::time(double t) const {
  return std::max(normal_mass(t0_, t1_, t, bw_.time), 1e-300);
}

SummaryCache build_summary_cache(const PointPattern& x,
                                 const ReconConfig& cfg) {
  validate_config(cfg);
  if (x.size() < 2) throw data_error("need at least two points");
  if (x.size() > 65534) throw data_error("pattern too large for reconstruction");

  SummaryCache c;
  c.window = x.window();
  c.n = static_cast<int>(x.size());
  c.bw = cfg.bandwidths ? *cfg.bandwidths : select_bandwidths(x, cfg.bw_method);
  c.grid = build_grid(c.window, cfg.nx, cfg.ny, cfg.nt);

  const IntensityField field = estimate_rho_st(x, c.bw, c.grid, cfg.estimate);
  c.surface = field.rho_st;
  c.valid = field.valid;
  c.density = field.rho_sep;
  const int S = c.grid.spatial_cells();
  for (int it = 0; it < c.grid.nt; ++it)
    for (int s = 0; s < S; ++s)
      if (!field.cell_valid(s, it)) c.density(s, it) = 0.0;

  c.inside_mask = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s)
    c.inside_mask[s] = c.grid.spatial_inside[s] ? 1.0 : 0.0;

  c.edges = std::make_shared<const EdgeTables>(
      c.window, c.bw, cfg.estimate.quad_refine * cfg.nx,
      cfg.estimate.quad_refine * cfg.ny);
  c.lag_k = make_lag_grid(cfg.r_k, cfg.lag_nr, cfg.t_k, cfg.lag_nt);
  c.lag_d = make_lag_grid(cfg.r_d, cfg.lag_nr, cfg.t_d, cfg.lag_nt);
  c.setcov = std::make_shared<const SetCovariance>(c.window, cfg.r_k);

  Eigen::VectorXd p_space = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd q_time = Eigen::VectorXd::Zero(c.grid.nt);
  for (const PointST& pt : x.points()) {
    p_space += spatial_column(c.grid, *c.edges, c.bw.space, pt.x, pt.y);
    q_time += temporal_row(c.grid, *c.edges, c.bw.time, pt.t);
  }
  c.rho_sep = (p_space * q_time.transpose()) / static_cast<double>(c.n);

  const std::vector<double> rho_pts =
      surface_at_points(c.grid, c.surface, x.points());
  c.k_hat = estimate_K_st(x, rho_pts, c.lag_k, *c.setcov);
  c.d_k = estimate_Dk(x, cfg.k_max, c.lag_d);
  return c;
}

std::vector<double> surface_intensity(const SummaryCache& cache,
                                      const std::vector<PointST>& pts) {
  return surface_at_points(cache.grid, cache.surface, pts);
}

Eigen::MatrixXd estimate_K_st(const PointPattern& p,
                              const std::vector<double>& rho_at_points,
                              const LagGrid& lag, const SetCovariance& sc) {
  const std::size_t n = p.size();
  if (rho_at_points.size() != n)
    throw data_error("intensity vector size mismatch");
  for (double v : rho_at_points)
    if (!(v > 0.0) || !std::isfinite(v))
      throw data_error("zero intensity at a point");

  const int nr = static_cast<int>(lag.r.size());
  const int nt = static_cast<int>(lag.t.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(nr, nt);
  const Window& w = p.window();
  const double area = w.area(), tlen = w.time_length();
  const double vol = area * tlen;
  const auto& pts = p.points();
  const double rmax = lag.r.back(), tmax = lag.t.back();

  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dtv = std::abs(pts[i].t - pts[j].t);
      if (dtv > tmax) continue;
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d > rmax) continue;
      const int a0 = lag_index(lag.r, d), b0 = lag_index(lag.t, dtv);
      if (a0 >= nr || b0 >= nt) continue;
      const double scv = sc(dx, dy), tc = tlen - dtv;
      if (!(scv > 0.0) || !(tc > 0.0))
        throw numeric_error("translation correction vanished");
      const double wij = scv * tc / vol;
      acc(a0, b0) +=
          2.0 / (rho_at_points[i] * rho_at_points[j] * wij * vol);
    }

  // Prefix sums turn per-lag point masses into the staircase K(r, t).
  for (int a = 1; a < nr; ++a) acc.row(a) += acc.row(a - 1);
  for (int b = 1; b < nt; ++b) acc.col(b) += acc.col(b - 1);
  return acc;
}

Eigen::MatrixXd estimate_K_st(const PointPattern& p,
                              const std::vector<double>& rho_at_points,
                              const LagGrid& lag) {
  const SetCovariance sc(p.window(), lag.r.empty() ? 1.0 : lag.r.back());
  return estimate_K_st(p, rho_at_points, lag, sc);
}

std::vector<Eigen::MatrixXd> estimate_Dk(const PointPattern& p, int k_max,
                                         const LagGrid& lag) {
  if (k_max < 1) throw data_error("k_max must be >= 1");
  const std::size_t n = p.size();
  if (n < 1) throw data_error("empty pattern");

  const int nr = static_cast<int>(lag.r.size());
  const int nt = static_cast<int>(lag.t.size());
  const auto& pts = p.points();
  const double rmax = lag.r.back(), tmax = lag.t.back();

  std::vector<Eigen::MatrixXi> cnt(n, Eigen::MatrixXi::Zero(nr, nt));
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dtv = std::abs(pts[i].t - pts[j].t);
      if (dtv > tmax) continue;
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d > rmax) continue;
      const int a0 = lag_index(lag.r, d), b0 = lag_index(lag.t, dtv);
      if (a0 >= nr || b0 >= nt) continue;
      cnt[i](a0, b0) += 1;
      cnt[j](a0, b0) += 1;
    }

  std::vector<Eigen::MatrixXd> out(
      static_cast<std::size_t>(k_max), Eigen::MatrixXd::Zero(nr, nt));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXi& ci = cnt[i];
    for (int a = 1; a < nr; ++a) ci.row(a) += ci.row(a - 1);
    for (int b = 1; b < nt; ++b) ci.col(b) += ci.col(b - 1);
    for (int k = 1; k <= k_max; ++k)
      out[k - 1] += (ci.array() >= k).cast<double>().matrix();
  }
  for (auto& m : out) m /= static_cast<double>(n);
  return out;
}

namespace {

// Incremental reconstruction state. Pairwise structures are updated in
// O(n + lag cells) per deletion/insertion; the energy is always
// re-evaluated from the structures, so accepted energies come from one
// deterministic arithmetic path.
class ReconState {
 public:
  ReconState(const SummaryCache& x, const ReconConfig& cfg)
      : x_(x),
        cfg_(cfg),
        nr_k_(static_cast<int>(x.lag_k.r.size())),
        nt_k_(static_cast<int>(x.lag_k.t.size())),
        nr_d_(static_cast<int>(x.lag_d.r.size())),
        nt_d_(static_cast<int>(x.lag_d.t.size())),
        ky_(Eigen::MatrixXd::Zero(nr_k_, nt_k_)),
        p_space_(Eigen::VectorXd::Zero(x.grid.spatial_cells())),
        q_time_(Eigen::VectorXd::Zero(x.grid.nt)),
        sqrt_kx_(x.k_hat.array().sqrt()),
        area_(x.window.area()),
        tlen_(x.window.time_length()),
        vol_wt_(x.window.volume()) {
    const std::size_t g = static_cast<std::size_t>(nr_d_) * nt_d_;
    nk_.assign(static_cast<std::size_t>(cfg.k_max),
               Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(g)));
    dkx_.reserve(x.d_k.size());
    for (const Eigen::MatrixXd& m : x.d_k)
      dkx_.push_back(Eigen::Map<const Eigen::ArrayXd>(
          m.data(), static_cast<Eigen::Index>(g)));
  }

  struct Removed {
    PointST pt;
    double rho = 0.0;
    Eigen::VectorXd kcol, krow;
    std::vector<std::uint16_t> c;
  };

  std::size_t size() const { return pts_.size(); }
  const std::vector<PointST>& points() const { return pts_; }

  void insert_fresh(const PointST& q) {
    Removed r;
    r.pt = q;
    r.rho = checked_surface(q);
    r.kcol = spatial_column(x_.grid, *x_.edges, x_.bw.space, q.x, q.y);
    r.krow = temporal_row(x_.grid, *x_.edges, x_.bw.time, q.t);
    insert_core(std::move(r), false);
  }

  // Exact integer revert: reuses the stored kernel vectors and count
  // staircase, valid because the other points are unchanged since the
  // matching remove_point.
  void reinsert(Removed&& r) { insert_core(std::move(r), true); }

  Removed remove_point(std::size_t idx) {
    const std::size_t g = static_cast<std::size_t>(nr_d_) * nt_d_;
    Removed r;
    r.pt = pts_[idx];
    r.rho = rho_pt_[idx];
    r.kcol = std::move(kcol_[idx]);
    r.krow = std::move(krow_[idx]);
    r.c = std::move(c_[idx]);

    for (std::size_t cell = 0; cell < g; ++cell) {
      const int v = std::min<int>(r.c[cell], cfg_.k_max);
      for (int k = 1; k <= v; ++k) nk_[k - 1][cell] -= 1.0;
    }
    for (std::size_t j = 0; j < pts_.size(); ++j) {
      if (j == idx) continue;
      pair_update(r.pt, r.rho, j, -1);
    }
    p_space_ -= r.kcol;
    q_time_ -= r.krow;

    const std::size_t last = pts_.size() - 1;
    if (idx != last) {
      pts_[idx] = pts_[last];
      rho_pt_[idx] = rho_pt_[last];
      kcol_[idx] = std::move(kcol_[last]);
      krow_[idx] = std::move(krow_[last]);
      c_[idx] = std::move(c_[last]);
    }
    pts_.pop_back();
    rho_pt_.pop_back();
    kcol_.pop_back();
    krow_.pop_back();
    c_.pop_back();
    return r;
  }

  double current_energy() const {
    double e = 0.0;
    const double n = static_cast<double>(pts_.size());
    if (cfg_.w_k > 0.0)
      e += cfg_.w_k * x_.lag_k.dr * x_.lag_k.dt *
           (sqrt_kx_ - ky_.array().max(0.0).sqrt()).square().sum();
    if (cfg_.w_dk > 0.0)
      for (int k = 0; k < cfg_.k_max; ++k)
        e += cfg_.w_dk * x_.lag_d.dr * x_.lag_d.dt *
             (dkx_[static_cast<std::size_t>(k)] -
              nk_[static_cast<std::size_t>(k)] / n)
                 .square()
                 .sum();
    if (cfg_.w_delta > 0.0) {
      Eigen::MatrixXd diff =
          x_.rho_sep - (p_space_ * q_time_.transpose()) / n;
      diff.array().colwise() *= x_.inside_mask.array();
      e += cfg_.w_delta * x_.grid.cell_volume() * diff.squaredNorm();
    }
    return e;
  }

 private:
  double checked_surface(const PointST& q) const {
    const double v = surface_at(x_.grid, x_.surface, q.x, q.y, q.t);
    if (!(v > 0.0)) throw data_error("zero intensity at a point");
    return v;
  }

  // Applies the pair (moving point, pts_[j]) to ky_ and the count
  // staircase of j (with N_k crossing maintenance); dir is +1/-1.
  void pair_update(const PointST& p, double rho_p, std::size_t j, int dir) {
    const double dx = p.x - pts_[j].x, dy = p.y - pts_[j].y;
    const double dtv = std::abs(p.t - pts_[j].t);
    const double d = std::sqrt(dx * dx + dy * dy);
    if (dtv <= x_.lag_k.t.back() && d <= x_.lag_k.r.back()) {
      const int a0 = lag_index(x_.lag_k.r, d);
      const int b0 = lag_index(x_.lag_k.t, dtv);
      if (a0 < nr_k_ && b0 < nt_k_) {
        const double scv = (*x_.setcov)(dx, dy), tc = tlen_ - dtv;
        if (!(scv > 0.0) || !(tc > 0.0))
          throw numeric_error("translation correction vanished");
        const double wij = scv * tc / (area_ * tlen_);
        const double v = 2.0 / (rho_p * rho_pt_[j] * wij * vol_wt_);
        ky_.block(a0, b0, nr_k_ - a0, nt_k_ - b0).array() += dir * v;
      }
    }
    if (dtv <= x_.lag_d.t.back() && d <= x_.lag_d.r.back()) {
      const int a0 = lag_index(x_.lag_d.r, d);
      const int b0 = lag_index(x_.lag_d.t, dtv);
      if (a0 < nr_d_ && b0 < nt_d_) bump_rect(c_[j], a0, b0, dir);
      last_a0_ = a0;
      last_b0_ = b0;
      last_hit_ = a0 < nr_d_ && b0 < nt_d_;
    } else {
      last_hit_ = false;
    }
  }

  void bump_rect(std::vector<std::uint16_t>& cv, int a0, int b0, int dir) {
    for (int b = b0; b < nt_d_; ++b) {
      const std::size_t base = static_cast<std::size_t>(b) * nr_d_;
      if (dir > 0) {
        for (int a = a0; a < nr_d_; ++a) {
          const int nv = ++cv[base + a];
          if (nv <= cfg_.k_max) nk_[nv - 1][base + a] += 1.0;
        }
      } else {
        for (int a = a0; a < nr_d_; ++a) {
          const int ov = cv[base + a]--;
          if (ov <= cfg_.k_max) nk_[ov - 1][base + a] -= 1.0;
        }
      }
    }
  }

  void insert_core(Removed&& r, bool have_counts) {
    const std::size_t g = static_cast<std::size_t>(nr_d_) * nt_d_;
    std::vector<std::uint16_t> cq;
    if (have_counts)
      cq = std::move(r.c);
    else
      cq.assign(g, 0);

    for (std::size_t j = 0; j < pts_.size(); ++j) {
      pair_update(r.pt, r.rho, j, +1);
      if (!have_counts && last_hit_) {
        // mirror count for the inserted point itself
        for (int b = last_b0_; b < nt_d_; ++b) {
          const std::size_t base = static_cast<std::size_t>(b) * nr_d_;
          for (int a = last_a0_; a < nr_d_; ++a) ++cq[base + a];
        }
      }
    }
    for (std::size_t cell = 0; cell < g; ++cell) {
      const int v = std::min<int>(cq[cell], cfg_.k_max);
      for (int k = 1; k <= v; ++k) nk_[k - 1][cell] += 1.0;
    }
    p_space_ += r.kcol;
    q_time_ += r.krow;
    pts_.push_back(r.pt);
    rho_pt_.push_back(r.rho);
    kcol_.push_back(std::move(r.kcol));
    krow_.push_back(std::move(r.krow));
    c_.push_back(std::move(cq));
  }

  const SummaryCache& x_;
  const ReconConfig& cfg_;
  int nr_k_, nt_k_, nr_d_, nt_d_;
  std::vector<PointST> pts_;
  std::vector<double> rho_pt_;
  std::vector<Eigen::VectorXd> kcol_, krow_;
  std::vector<std::vector<std::uint16_t>> c_;
  Eigen::MatrixXd ky_;
  std::vector<Eigen::ArrayXd> nk_;
  std::vector<Eigen::ArrayXd> dkx_;
  Eigen::VectorXd p_space_, q_time_;
  Eigen::ArrayXXd sqrt_kx_;
  double area_, tlen_, vol_wt_;
  // scratch from the last pair_update, for the inserted point's counts
  int last_a0_ = 0, last_b0_ = 0;
  bool last_hit_ = false;
};

void check_cache_matches(const SummaryCache& cache, const ReconConfig& cfg) {
  if (static_cast<int>(cache.d_k.size()) != cfg.k_max ||
      static_cast<int>(cache.lag_k.r.size()) != cfg.lag_nr ||
      static_cast<int>(cache.lag_k.t.size()) != cfg.lag_nt ||
      cache.grid.nx != cfg.nx || cache.grid.ny != cfg.ny ||
      cache.grid.nt != cfg.nt)
    throw data_error("config does not match summary cache");
}

}  // namespace

double energy(const SummaryCache& cache, const PointPattern& y,
              const ReconConfig& cfg) {
  validate_config(cfg);
  check_cache_matches(cache, cfg);
  if (y.size() < 1) throw data_error("empty pattern");

  double e = 0.0;
  if (cfg.w_k > 0.0) {
    const std::vector<double> rho_y =
        surface_at_points(cache.grid, cache.surface, y.points());
    const Eigen::MatrixXd ky =
        estimate_K_st(y, rho_y, cache.lag_k, *cache.setcov);
    e += cfg.w_k * cache.lag_k.dr * cache.lag_k.dt *
         (cache.k_hat.array().sqrt() - ky.array().sqrt()).square().sum();
  }
  if (cfg.w_dk > 0.0) {
    const std::vector<Eigen::MatrixXd> dky =
        estimate_Dk(y, cfg.k_max, cache.lag_d);
    for (int k = 0; k < cfg.k_max; ++k)
      e += cfg.w_dk * cache.lag_d.dr * cache.lag_d.dt *
           (cache.d_k[static_cast<std::size_t>(k)].array() -
            dky[static_cast<std::size_t>(k)].array())
               .square()
               .sum();
  }
  if (cfg.w_delta > 0.0) {
    const int S = cache.grid.spatial_cells();
    Eigen::VectorXd ps = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd qt = Eigen::VectorXd::Zero(cache.grid.nt);
    for (const PointST& pt : y.points()) {
      ps += spatial_column(cache.grid, *cache.edges, cache.bw.space, pt.x,
                           pt.y);
      qt += temporal_row(cache.grid, *cache.edges, cache.bw.time, pt.t);
    }
    Eigen::MatrixXd diff =
        cache.rho_sep - (ps * qt.transpose()) / static_cast<double>(y.size());
    diff.array().colwise() *= cache.inside_mask.array();
    e += cfg.w_delta * cache.grid.cell_volume() * diff.squaredNorm();
  }
  return e;
}

PointPattern sample_binomial_from_density(int n, const Grid3& grid,
                                          const Eigen::MatrixXd& density,
                                          const Window& w, Rng& rng) {
  if (n < 0) throw data_error("negative count");
  const DensitySampler sampler(grid, density, w);
  std::vector<PointST> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts.push_back(sampler.draw(rng));
  return PointPattern::unchecked(std::move(pts), w);
}

ReconResult reconstruct_cached(const SummaryCache& cache,
                               const ReconConfig& cfg, Rng& rng,
                               const PointPattern* y0) {
  validate_config(cfg);
  check_cache_matches(cache, cfg);

  const DensitySampler sampler(cache.grid, cache.density, cache.window);
  std::vector<PointST> init;
  if (y0) {
    init = y0->points();
  } else {
    init.reserve(static_cast<std::size_t>(cache.n));
    for (int i = 0; i < cache.n; ++i) init.push_back(sampler.draw(rng));
  }
  if (init.empty()) throw data_error("empty initial pattern");

  ReconState st(cache, cfg);
  for (const PointST& q : init) st.insert_fresh(q);

  double e_cur = st.current_energy();
  std::vector<double> log_energies{e_cur};
  long proposals = 0, accepted = 0;
  int rejects = 0;
  const std::size_t n = st.size();

  while (proposals < cfg.max_iter && rejects < cfg.max_consecutive_rejects) {
    ++proposals;
    const std::size_t del = static_cast<std::size_t>(rng.uniform_int(n));
    const PointST q = sampler.draw(rng);
    ReconState::Removed old = st.remove_point(del);
    st.insert_fresh(q);
    const double e_new = st.current_energy();
    if (e_new <= e_cur) {
      e_cur = e_new;
      log_energies.push_back(e_new);
      ++accepted;
      rejects = 0;
    } else {
      st.remove_point(st.size() - 1);
      st.reinsert(std::move(old));
      ++rejects;
    }
  }

  return ReconResult{PointPattern::unchecked(st.points(), cache.window),
                     std::move(log_energies), proposals, accepted};
}

ReconResult reconstruct(const PointPattern& x, const ReconConfig& cfg,
                        Rng& rng) {
  if (x.size() < 2) throw data_error("need at least two points");
  const SummaryCache cache = build_summary_cache(x, cfg);
  return reconstruct_cached(cache, cfg, rng);
}

MonteCarloTestResult run_reconstruction_test(const PointPattern& p,
                                             const ReconConfig& recon_cfg,
                                             const PermTestConfig& test_cfg) {
  if (test_cfg.n_perm < 1) throw data_error("need at least one replicate");
  if (p.size() < 2) throw data_error("need at least two points");

  const Bandwidths bw = test_cfg.bandwidths
                            ? *test_cfg.bandwidths
                            : select_bandwidths(p, test_cfg.bw_method);
  const Grid3 grid =
      build_grid(p.window(), test_cfg.nx, test_cfg.ny, test_cfg.nt);
  const KernelBasis basis = compute_kernel_basis(p, bw, grid, test_cfg.estimate);
  const IntensityField field = field_from_basis(basis, p, bw, grid);

  ReconConfig rc = recon_cfg;
  if (!rc.bandwidths) rc.bandwidths = bw;
  const SummaryCache cache = build_summary_cache(p, rc);

  const Statistic st = test_cfg.statistic;
  const std::vector<double> row0 =
      statistic_values(st, field.rho_st, field.rho_sep, field.valid, grid);
  const int m = test_cfg.n_perm + 1;
  Eigen::MatrixXd samples(m, static_cast<Eigen::Index>(row0.size()));
  for (std::size_t j = 0; j < row0.size(); ++j)
    samples(0, static_cast<Eigen::Index>(j)) = row0[j];

  parallel_for(static_cast<std::size_t>(test_cfg.n_perm), test_cfg.threads,
               [&](std::size_t r) {
                 Rng rng = Rng::for_replicate(test_cfg.seed, r + 1);
                 const ReconResult rec = reconstruct_cached(cache, rc, rng);
                 const KernelBasis b2 = compute_kernel_basis(
                     rec.pattern, bw, grid, test_cfg.estimate);
                 const IntensityField f2 =
                     field_from_basis(b2, rec.pattern, bw, grid);
                 const std::vector<double> vals = statistic_values(
                     st, f2.rho_st, f2.rho_sep, field.valid, grid);
                 for (std::size_t j = 0; j < vals.size(); ++j)
                   samples(static_cast<Eigen::Index>(r + 1),
                           static_cast<Eigen::Index>(j)) = vals[j];
               });

  MonteCarloTestResult res;
  res.statistic = st;
  res.alpha = test_cfg.alpha;
  res.n_perm = test_cfg.n_perm;
  res.seed = test_cfg.seed;
  res.grid_dims = {test_cfg.nx, test_cfg.ny, test_cfg.nt};
  res.bandwidths = bw;
  res.data_sample = statistic_sample(st, field);
  if (st != Statistic::SDev) {
    const Eigen::VectorXd measures = erl_measures(pointwise_ranks(samples));
    res.envelope = global_envelope(samples, measures, test_cfg.alpha);
    res.p_value = res.envelope->p_value;
  } else {
    res.deviation_stats.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) res.deviation_stats[i] = samples(i, 0);
    res.p_value = deviation_pvalue(res.deviation_stats, 0);
  }
  return res;
}

}  // namespace stsep
