#include <doctest.h>

#include "stsep/errors.hpp"
#include "stsep/geometry.hpp"

using namespace stsep;

TEST_CASE("rectangle window") {
  Window w = Window::rectangle(0, 2, -1, 1, 0, 5);
  CHECK(w.is_rectangle());
  CHECK(w.area() == doctest::Approx(4.0));
  CHECK(w.time_length() == doctest::Approx(5.0));
  CHECK(w.volume() == doctest::Approx(20.0));
  // The boundary belongs to the window.
  CHECK(w.contains(0.0, -1.0));
  CHECK(w.contains(2.0, 1.0));
  CHECK(!w.contains(2.0001, 0.0));
  CHECK(w.contains(PointST{1.0, 0.0, 0.0}));
  CHECK(w.contains(PointST{1.0, 0.0, 5.0}));
  CHECK(!w.contains(PointST{1.0, 0.0, 5.0001}));

  CHECK_THROWS_AS(Window::rectangle(0, 0, 0, 1, 0, 1), data_error);
  CHECK_THROWS_AS(Window::rectangle(0, 1, 0, 1, 1, 1), data_error);
}

TEST_CASE("polygon window") {
  // Unit square given as a polygon behaves like the rectangle.
  Window sq = Window::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0, 1);
  CHECK(!sq.is_rectangle());
  CHECK(sq.area() == doctest::Approx(1.0));
  CHECK(sq.contains(0.5, 0.5));
  CHECK(!sq.contains(1.2, 0.5));
  CHECK(sq.bounding_box().xmax == doctest::Approx(1.0));

  // L-shape: [0,2]x[0,1] plus [0,1]x[1,2].
  Window ell =
      Window::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, 0, 1);
  CHECK(ell.area() == doctest::Approx(3.0));
  CHECK(ell.contains(1.5, 0.5));
  CHECK(!ell.contains(1.5, 1.5));
  CHECK(ell.contains(0.5, 1.5));

  CHECK_THROWS_AS(Window::polygon({{0, 0}, {1, 0}}, 0, 1), data_error);
}

TEST_CASE("point pattern validation") {
  Window w = Window::unit_cube();
  std::vector<PointST> pts{{0.1, 0.2, 0.3}, {0.5, 0.5, 0.5}};
  PointPattern p(pts, w);
  CHECK(p.size() == 2);
  CHECK(p.xs() == std::vector<double>{0.1, 0.5});
  CHECK(p.ts() == std::vector<double>{0.3, 0.5});

  std::vector<PointST> outside{{0.1, 0.2, 0.3}, {1.5, 0.5, 0.5}};
  CHECK_THROWS_AS(PointPattern(outside, w), data_error);
  std::vector<PointST> dup{{0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}};
  CHECK_THROWS_AS(PointPattern(dup, w), data_error);
}

TEST_CASE("grid over rectangle") {
  Grid3 g = build_grid(Window::unit_cube(), 4, 5, 3);
  CHECK(g.nx == 4);
  CHECK(g.dx == doctest::Approx(0.25));
  CHECK(g.xs[0] == doctest::Approx(0.125));
  CHECK(g.ys[4] == doctest::Approx(0.9));
  CHECK(g.ts[1] == doctest::Approx(0.5));
  CHECK(g.cell_volume() == doctest::Approx(0.25 * 0.2 * (1.0 / 3.0)));
  CHECK(g.spatial_cells() == 20);
  CHECK(g.inside_count() == 20);
  CHECK(g.inside(0, 0));
  CHECK(g.spatial_index(1, 2) == 2 * 4 + 1);
  CHECK_THROWS_AS(build_grid(Window::unit_cube(), 0, 5, 3), data_error);
}

TEST_CASE("grid over polygon keeps center-inside cells") {
  Window ell =
      Window::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, 0, 1);
  Grid3 g = build_grid(ell, 4, 4, 2);
  // Bounding box [0,2]^2, centers at 0.25/0.75/1.25/1.75: the four cells
  // with x > 1 and y > 1 fall outside the L.
  CHECK(g.inside_count() == 12);
  CHECK(g.inside(2, 1));
  CHECK(!g.inside(2, 2));
}
