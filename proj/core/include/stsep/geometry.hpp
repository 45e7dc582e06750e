#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stsep {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct PointST {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
};

struct Rect {
  double xmin = 0.0, xmax = 1.0;
  double ymin = 0.0, ymax = 1.0;
};

// Observation region W x [t0, t1]. W is an axis-aligned rectangle or a
// simple polygon; the boundary counts as inside.
class Window {
public:
  static Window rectangle(double xmin, double xmax, double ymin, double ymax,
                          double t0, double t1);
  static Window polygon(std::vector<Point2> vertices, double t0, double t1);
  static Window unit_cube() { return rectangle(0, 1, 0, 1, 0, 1); }

  bool is_rectangle() const { return polygon_.empty(); }
  const Rect& bounding_box() const { return bbox_; }
  const std::vector<Point2>& vertices() const { return polygon_; }

  double area() const { return area_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double time_length() const { return t1_ - t0_; }
  double volume() const { return area_ * time_length(); }

  bool contains(double x, double y) const;
  bool contains(const PointST& p) const {
    return p.t >= t0_ && p.t <= t1_ && contains(p.x, p.y);
  }

private:
  Window() = default;
  Rect bbox_;
  std::vector<Point2> polygon_;  // empty for rectangles
  double area_ = 0.0;
  double t0_ = 0.0, t1_ = 1.0;
};

bool point_in_window(double x, double y, const Window& w);

// Finite point pattern on a window. Construction validates that every
// point lies inside W x T and that no exact (x, y, t) triple repeats.
class PointPattern {
public:
  PointPattern(std::vector<PointST> points, Window window);

  // Skips validation; callers must guarantee the invariants themselves
  // (used for permuted patterns, whose coordinate multisets are unchanged).
  static PointPattern unchecked(std::vector<PointST> points, Window window);

  std::size_t size() const { return points_.size(); }
  const std::vector<PointST>& points() const { return points_; }
  const Window& window() const { return window_; }

  std::vector<double> xs() const;
  std::vector<double> ys() const;
  std::vector<double> ts() const;

private:
  PointPattern() = default;
  std::vector<PointST> points_;
  Window window_ = Window::unit_cube();
};

// Regular evaluation grid: equal subdivisions of the bounding box of
// W x T, cells identified by their centers. A spatial cell belongs to
// the window iff its center does (cells are not clipped).
struct Grid3 {
  int nx = 0, ny = 0, nt = 0;
  std::vector<double> xs, ys, ts;     // cell center coordinates
  double dx = 0.0, dy = 0.0, dt = 0.0;
  std::vector<std::uint8_t> spatial_inside;  // nx*ny, row-major in (ix, iy)

  int spatial_cells() const { return nx * ny; }
  int cells() const { return nx * ny * nt; }
  double cell_area() const { return dx * dy; }
  double cell_volume() const { return dx * dy * dt; }
  int spatial_index(int ix, int iy) const { return iy * nx + ix; }
  bool inside(int ix, int iy) const {
    return spatial_inside[spatial_index(ix, iy)] != 0;
  }
  std::size_t inside_count() const;
};

Grid3 build_grid(const Window& w, int nx, int ny, int nt);

}  // namespace stsep
