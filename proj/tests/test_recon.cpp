#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "stsep/errors.hpp"
#include "stsep/recon.hpp"
#include "stsep/rng.hpp"

using namespace stsep;

namespace {

PointPattern uniform_pattern(const Window& w, int n, std::uint64_t seed) {
  Rng rng(seed);
  const Rect& b = w.bounding_box();
  std::vector<PointST> pts;
  while (pts.size() < static_cast<std::size_t>(n)) {
    double x = rng.uniform(b.xmin, b.xmax);
    double y = rng.uniform(b.ymin, b.ymax);
    if (!w.contains(x, y)) continue;
    pts.push_back({x, y, rng.uniform(w.t0(), w.t1())});
  }
  return PointPattern(std::move(pts), w);
}

// Weights and bounds proportioned for unit-cube patterns.
ReconConfig cube_config() {
  ReconConfig rc;
  rc.w_k = 1.0;
  rc.w_dk = 1.0;
  rc.w_delta = 1e-6;
  rc.r_k = 0.25;
  rc.t_k = 0.25;
  rc.r_d = 0.125;
  rc.t_d = 0.125;
  rc.k_max = 2;
  rc.lag_nr = 8;
  rc.lag_nt = 8;
  rc.nx = 10;
  rc.ny = 10;
  rc.nt = 6;
  rc.max_iter = 400;
  rc.max_consecutive_rejects = 100;
  return rc;
}

}  // namespace

TEST_CASE("lag grids use cell midpoints") {
  LagGrid lag = make_lag_grid(1.0, 4, 0.5, 5);
  REQUIRE(lag.r.size() == 4);
  REQUIRE(lag.t.size() == 5);
  CHECK(lag.dr == doctest::Approx(0.25));
  CHECK(lag.dt == doctest::Approx(0.1));
  CHECK(lag.r[0] == doctest::Approx(0.125));
  CHECK(lag.r[3] == doctest::Approx(0.875));
  CHECK(lag.t[1] == doctest::Approx(0.15));
  CHECK_THROWS_AS(make_lag_grid(0.0, 4, 0.5, 5), data_error);
  CHECK_THROWS_AS(make_lag_grid(1.0, 0, 0.5, 5), data_error);
}

TEST_CASE("set covariance of a rectangle") {
  Window w = Window::rectangle(0, 2, 0, 1.5, 0, 1);
  SetCovariance sc(w, 1.0);
  CHECK(sc(0.0, 0.0) == doctest::Approx(3.0));
  CHECK(sc(0.3, -0.4) == doctest::Approx((2.0 - 0.3) * (1.5 - 0.4)));
  CHECK(sc(-0.3, 0.4) == doctest::Approx((2.0 - 0.3) * (1.5 - 0.4)));
  CHECK(sc(2.5, 0.0) == 0.0);
}

TEST_CASE("polygon set covariance matches the rectangle form") {
  Window rect = Window::rectangle(0, 1, 0, 1, 0, 1);
  Window poly = Window::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0, 1);
  SetCovariance a(rect, 0.3), b(poly, 0.3);
  for (double hx : {0.0, 0.05, 0.13, -0.21, 0.29})
    for (double hy : {0.0, 0.08, -0.17, 0.25})
      CHECK(b(hx, hy) == doctest::Approx(a(hx, hy)).epsilon(1e-9));
}

TEST_CASE("edge tables") {
  Bandwidths bw{0.1, 0.05};
  EdgeTables rect(Window::unit_cube(), bw, 100, 100);
  CHECK(rect.time(0.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rect.time(0.5) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rect.space(0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-9));
  // x = 0.5 is five bandwidths from either edge, so the x-factor is
  // 2*Phi(5) - 1, about 5.7e-7 below one.
  CHECK(rect.space(0.5, 0.0) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(rect.space(0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-5));

  Window poly = Window::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0, 1);
  EdgeTables tab(poly, bw, 120, 120);
  for (double x : {0.02, 0.3, 0.5, 0.97})
    for (double y : {0.05, 0.5, 0.9})
      CHECK(tab.space(x, y) == doctest::Approx(rect.space(x, y)).epsilon(5e-3));
  CHECK(tab.time(1.0) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("single-pair K estimate") {
  Window w = Window::unit_cube();
  std::vector<PointST> pts{{0.4, 0.5, 0.3}, {0.5, 0.5, 0.5}};
  PointPattern p(pts, w);
  LagGrid lag = make_lag_grid(0.2, 2, 0.4, 2);
  SetCovariance sc(w, 0.2);
  Eigen::MatrixXd k = estimate_K_st(p, {2.0, 2.0}, lag, sc);
  REQUIRE(k.rows() == 2);
  REQUIRE(k.cols() == 2);
  // Distance 0.1, lag 0.2: only the (r=0.15, t=0.3) cell sees the pair.
  CHECK(k(0, 0) == 0.0);
  CHECK(k(0, 1) == 0.0);
  CHECK(k(1, 0) == 0.0);
  CHECK(k(1, 1) == doctest::Approx(0.69444444444).epsilon(1e-10));

  CHECK_THROWS_AS(estimate_K_st(p, {2.0}, lag, sc), data_error);
  CHECK_THROWS_AS(estimate_K_st(p, {2.0, 0.0}, lag, sc), data_error);
}

TEST_CASE("poisson K estimate matches the benchmark") {
  const double lambda = 300.0;
  LagGrid lag = make_lag_grid(0.25, 5, 0.25, 5);
  SetCovariance sc(Window::unit_cube(), 0.25);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(5, 5);
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    Rng rng = Rng::for_replicate(777, r);
    long n = rng.poisson(lambda);
    std::vector<PointST> pts;
    for (long i = 0; i < n; ++i)
      pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    PointPattern p(std::move(pts), Window::unit_cube());
    std::vector<double> rho(p.size(), lambda);
    mean += estimate_K_st(p, rho, lag, sc);
  }
  mean /= reps;
  const double pi = 3.14159265358979323846;
  auto poisson_K = [&](double r, double t) { return 2.0 * pi * r * r * t; };
  CHECK(mean(4, 4) == doctest::Approx(poisson_K(lag.r[4], lag.t[4])).epsilon(0.10));
  CHECK(mean(2, 2) == doctest::Approx(poisson_K(lag.r[2], lag.t[2])).epsilon(0.20));
}

TEST_CASE("neighbour-count fractions") {
  // A and B are mutual neighbours at distance 0.06, C is isolated.
  std::vector<PointST> pts{
      {0.2, 0.2, 0.3}, {0.26, 0.2, 0.3}, {0.8, 0.8, 0.8}};
  PointPattern p(pts, Window::unit_cube());
  LagGrid lag = make_lag_grid(0.2, 2, 0.2, 2);
  std::vector<Eigen::MatrixXd> d = estimate_Dk(p, 2, lag);
  REQUIRE(d.size() == 2);
  CHECK(d[0](0, 0) == 0.0);
  CHECK(d[0](0, 1) == 0.0);
  CHECK(d[0](1, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(d[0](1, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(d[1].maxCoeff() == 0.0);
  CHECK_THROWS_AS(estimate_Dk(p, 0, lag), data_error);
}

TEST_CASE("summary cache layout") {
  PointPattern x = uniform_pattern(Window::unit_cube(), 120, 31);
  ReconConfig rc = cube_config();
  SummaryCache cache = build_summary_cache(x, rc);
  CHECK(cache.n == 120);
  CHECK(cache.bw.space > 0.0);
  CHECK(cache.bw.time > 0.0);
  CHECK(cache.k_hat.rows() == rc.lag_nr);
  CHECK(cache.k_hat.cols() == rc.lag_nt);
  CHECK(static_cast<int>(cache.d_k.size()) == rc.k_max);
  CHECK(cache.lag_k.r.back() == doctest::Approx(0.25 - 0.5 * cache.lag_k.dr));
  CHECK(cache.lag_d.r.back() == doctest::Approx(0.125 - 0.5 * cache.lag_d.dr));
  CHECK(cache.rho_sep.minCoeff() >= 0.0);
  CHECK(cache.surface.rows() == rc.nx * rc.ny);
  // Density is zero exactly on masked cells.
  for (int it = 0; it < rc.nt; ++it)
    for (int s = 0; s < rc.nx * rc.ny; ++s)
      if (!cache.valid[static_cast<std::size_t>(it) * rc.nx * rc.ny + s])
        CHECK(cache.density(s, it) == 0.0);

  ReconConfig fixed = rc;
  fixed.bandwidths = Bandwidths{0.2, 0.15};
  std::vector<PointST> two{{0.1, 0.1, 0.1}, {0.6, 0.6, 0.6}};
  CHECK_NOTHROW(build_summary_cache(PointPattern(two, Window::unit_cube()), fixed));
  std::vector<PointST> one{{0.1, 0.1, 0.1}};
  CHECK_THROWS_AS(
      build_summary_cache(PointPattern(one, Window::unit_cube()), fixed),
      data_error);
}

TEST_CASE("energy of the data against itself is zero") {
  PointPattern x = uniform_pattern(Window::unit_cube(), 120, 31);
  ReconConfig rc = cube_config();
  SummaryCache cache = build_summary_cache(x, rc);
  CHECK(energy(cache, x, rc) == 0.0);

  // Any disturbed pattern scores strictly worse.
  std::vector<PointST> pts = x.points();
  pts.resize(60);
  PointPattern y = PointPattern(pts, x.window());
  CHECK(energy(cache, y, rc) > 0.0);
}

TEST_CASE("binomial sampling from the cached density") {
  PointPattern x = uniform_pattern(Window::unit_cube(), 100, 77);
  ReconConfig rc = cube_config();
  SummaryCache cache = build_summary_cache(x, rc);
  Rng a(6), b(6);
  PointPattern ya =
      sample_binomial_from_density(37, cache.grid, cache.density, cache.window, a);
  PointPattern yb =
      sample_binomial_from_density(37, cache.grid, cache.density, cache.window, b);
  CHECK(ya.size() == 37);
  for (std::size_t i = 0; i < ya.size(); ++i) {
    CHECK(ya.points()[i].x == yb.points()[i].x);
    CHECK(cache.window.contains(ya.points()[i]));
  }

  Window ell =
      Window::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, 0, 1);
  PointPattern px = uniform_pattern(ell, 90, 78);
  SummaryCache pc = build_summary_cache(px, rc);
  Rng c(9);
  PointPattern yp =
      sample_binomial_from_density(50, pc.grid, pc.density, pc.window, c);
  CHECK(yp.size() == 50);
  for (const PointST& q : yp.points()) CHECK(ell.contains(q));
}

TEST_CASE("reconstruction contract on a small pattern") {
  PointPattern x = uniform_pattern(Window::unit_cube(), 70, 13);
  ReconConfig rc = cube_config();
  Rng r1(5), r2(5);
  ReconResult a = reconstruct(x, rc, r1);
  ReconResult b = reconstruct(x, rc, r2);

  CHECK(a.pattern.size() == x.size());
  REQUIRE(a.accepted_energies.size() == b.accepted_energies.size());
  CHECK(a.accepted_energies.size() == static_cast<std::size_t>(a.accepted) + 1);
  CHECK(a.proposals <= rc.max_iter);
  for (std::size_t i = 0; i < a.accepted_energies.size(); ++i)
    CHECK(a.accepted_energies[i] == b.accepted_energies[i]);
  for (std::size_t i = 0; i < a.pattern.size(); ++i) {
    CHECK(a.pattern.points()[i].x == b.pattern.points()[i].x);
    CHECK(a.pattern.points()[i].t == b.pattern.points()[i].t);
    CHECK(x.window().contains(a.pattern.points()[i]));
  }
  for (std::size_t i = 1; i < a.accepted_energies.size(); ++i)
    CHECK(a.accepted_energies[i] <= a.accepted_energies[i - 1]);
  CHECK(a.accepted_energies.back() < a.accepted_energies.front());

  // The incremental bookkeeping agrees with a from-scratch evaluation.
  SummaryCache cache = build_summary_cache(x, rc);
  double batch = energy(cache, a.pattern, rc);
  CHECK(batch == doctest::Approx(a.accepted_energies.back()).epsilon(1e-9));
}

TEST_CASE("seeding the loop with the data keeps the energy at zero") {
  PointPattern x = uniform_pattern(Window::unit_cube(), 80, 23);
  ReconConfig rc = cube_config();
  rc.max_iter = 50;
  SummaryCache cache = build_summary_cache(x, rc);
  Rng rng(4);
  ReconResult res = reconstruct_cached(cache, rc, rng, &x);
  CHECK(res.accepted_energies.front() <= 1e-8);
  CHECK(res.pattern.size() == x.size());
}

TEST_CASE("reconstruction-based test mirrors the permutation battery") {
  PointPattern x = uniform_pattern(Window::unit_cube(), 80, 55);
  ReconConfig rc = cube_config();
  rc.max_iter = 250;
  rc.max_consecutive_rejects = 60;
  PermTestConfig tc;
  tc.statistic = Statistic::S;
  tc.n_perm = 19;
  tc.nx = 10;
  tc.ny = 10;
  tc.nt = 6;
  tc.seed = 3;
  MonteCarloTestResult res = run_reconstruction_test(x, rc, tc);
  CHECK(res.n_perm == 19);
  CHECK(res.envelope.has_value());
  CHECK(res.p_value >= 1.0 / 20.0);
  CHECK(res.p_value <= 1.0);
  CHECK(res.p_value >= 0.1);  // the data is not extreme among its own clones
  CHECK(res.grid_dims == std::array<int, 3>{10, 10, 6});
  CHECK(res.bandwidths.space > 0.0);
  CHECK(res.data_sample.values.size() == res.envelope->data.size());

  MonteCarloTestResult again = run_reconstruction_test(x, rc, tc);
  CHECK(again.p_value == res.p_value);

  PermTestConfig td = tc;
  td.statistic = Statistic::SDev;
  MonteCarloTestResult dev = run_reconstruction_test(x, rc, td);
  CHECK(dev.deviation_stats.size() == 20);
  CHECK(dev.p_value >= 1.0 / 20.0);
  CHECK(!dev.envelope.has_value());
}
