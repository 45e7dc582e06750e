#include "stsep/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stsep/errors.hpp"

namespace stsep {

namespace {

double shoelace_area(const std::vector<Point2>& v) {
  double s = 0.0;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(s);
}

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1,
                        const Point2& q2) {
  auto orient = [](const Point2& a, const Point2& b, const Point2& c) {
    double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return (v > 0.0) - (v < 0.0);
  };
  int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  return o1 != o2 && o3 != o4;
}

void check_simple(const std::vector<Point2>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex and may touch there.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
        throw data_error("self-intersecting polygon");
    }
  }
}

}  // namespace

Window Window::rectangle(double xmin, double xmax, double ymin, double ymax,
                         double t0, double t1) {
  if (!(xmax > xmin) || !(ymax > ymin))
    throw data_error("window has zero area");
  if (!(t1 > t0)) throw data_error("window has empty time interval");
  Window w;
  w.bbox_ = Rect{xmin, xmax, ymin, ymax};
  w.area_ = (xmax - xmin) * (ymax - ymin);
  w.t0_ = t0;
  w.t1_ = t1;
  return w;
}

Window Window::polygon(std::vector<Point2> vertices, double t0, double t1) {
  if (vertices.size() < 3) throw data_error("polygon needs >= 3 vertices");
  if (!(t1 > t0)) throw data_error("window has empty time interval");
  check_simple(vertices);
  double area = shoelace_area(vertices);
  if (!(area > 0.0)) throw data_error("window has zero area");
  Window w;
  double xmin = vertices[0].x, xmax = xmin, ymin = vertices[0].y, ymax = ymin;
  for (const Point2& p : vertices) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  w.bbox_ = Rect{xmin, xmax, ymin, ymax};
  w.polygon_ = std::move(vertices);
  w.area_ = area;
  w.t0_ = t0;
  w.t1_ = t1;
  return w;
}

bool Window::contains(double x, double y) const {
  const Rect& b = bbox_;
  if (x < b.xmin || x > b.xmax || y < b.ymin || y > b.ymax) return false;
  if (is_rectangle()) return true;

  // Crossing test with an explicit on-edge check so that the boundary is
  // inside regardless of which side the ray-parity would assign.
  const double diag =
      std::hypot(b.xmax - b.xmin, b.ymax - b.ymin);
  const double tol = 1e-12 * diag;
  bool inside = false;
  const std::size_t n = polygon_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = polygon_[j];
    const Point2& c = polygon_[i];
    const double ex = c.x - a.x, ey = c.y - a.y;
    const double len = std::hypot(ex, ey);
    if (len > 0.0) {
      double cross = ex * (y - a.y) - ey * (x - a.x);
      double dot = (x - a.x) * ex + (y - a.y) * ey;
      if (std::abs(cross) <= tol * len && dot >= -tol * len &&
          dot <= len * len + tol * len)
        return true;  // on this edge
    }
    if ((c.y > y) != (a.y > y)) {
      double x_cross = c.x + (y - c.y) * (a.x - c.x) / (a.y - c.y);
      if (x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool point_in_window(double x, double y, const Window& w) {
  return w.contains(x, y);
}

PointPattern::PointPattern(std::vector<PointST> points, Window window)
    : points_(std::move(points)), window_(std::move(window)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const PointST& p = points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t))
      throw data_error("non-finite coordinate at point " + std::to_string(i));
    if (!window_.contains(p))
      throw data_error("point " + std::to_string(i) + " outside window");
  }
  std::vector<PointST> sorted = points_;
  std::sort(sorted.begin(), sorted.end(), [](const PointST& a, const PointST& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.t < b.t;
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].x == sorted[i - 1].x && sorted[i].y == sorted[i - 1].y &&
        sorted[i].t == sorted[i - 1].t)
      throw data_error("duplicate point in pattern");
  }
}

PointPattern PointPattern::unchecked(std::vector<PointST> points,
                                     Window window) {
  PointPattern p;
  p.points_ = std::move(points);
  p.window_ = std::move(window);
  return p;
}

std::vector<double> PointPattern::xs() const {
  std::vector<double> v(points_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = points_[i].x;
  return v;
}

std::vector<double> PointPattern::ys() const {
  std::vector<double> v(points_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = points_[i].y;
  return v;
}

std::vector<double> PointPattern::ts() const {
  std::vector<double> v(points_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = points_[i].t;
  return v;
}

std::size_t Grid3::inside_count() const {
  std::size_t c = 0;
  for (std::uint8_t b : spatial_inside) c += (b != 0);
  return c;
}

Grid3 build_grid(const Window& w, int nx, int ny, int nt) {
  if (nx < 1 || ny < 1 || nt < 1) throw data_error("grid dims must be >= 1");
  Grid3 g;
  g.nx = nx;
  g.ny = ny;
  g.nt = nt;
  const Rect& b = w.bounding_box();
  g.dx = (b.xmax - b.xmin) / nx;
  g.dy = (b.ymax - b.ymin) / ny;
  g.dt = (w.t1() - w.t0()) / nt;
  g.xs.resize(nx);
  g.ys.resize(ny);
  g.ts.resize(nt);
  for (int i = 0; i < nx; ++i) g.xs[i] = b.xmin + (i + 0.5) * g.dx;
  for (int i = 0; i < ny; ++i) g.ys[i] = b.ymin + (i + 0.5) * g.dy;
  for (int i = 0; i < nt; ++i) g.ts[i] = w.t0() + (i + 0.5) * g.dt;
  g.spatial_inside.assign(static_cast<std::size_t>(nx) * ny, 1);
  if (!w.is_rectangle()) {
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix)
        g.spatial_inside[g.spatial_index(ix, iy)] =
            w.contains(g.xs[ix], g.ys[iy]) ? 1 : 0;
  }
  return g;
}

}  // namespace stsep
