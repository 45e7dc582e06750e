#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "stsep/errors.hpp"
#include "stsep/sim.hpp"

using namespace stsep;

TEST_CASE("burst intensity and exact mass") {
  BurstModel flat;  // uniform base, gamma = 0, nu = 600
  CHECK(burst_intensity(flat, 0.7, 0.1, 0.9) == doctest::Approx(600.0));
  CHECK(burst_total_mass(flat) == doctest::Approx(600.0).epsilon(1e-12));

  BurstModel burst = flat;
  burst.gamma = 100.0;
  // Peak value at the burst mean: nu - gamma + gamma * phi3(0).
  CHECK(burst_intensity(burst, 0.3, 0.3, 0.2) ==
        doctest::Approx(51294.908747).epsilon(1e-9));
  CHECK(burst_total_mass(burst) ==
        doctest::Approx(500.0 + 100.0 * 0.999968326785).epsilon(1e-10));

  BurstModel tn = flat;
  tn.base = BurstBase::TimeNormal;
  // psi mass on [0,1] for sd 0.2 is Phi(2.5) - Phi(-2.5).
  CHECK(burst_total_mass(tn) == doctest::Approx(600.0 * 0.9875806693).epsilon(1e-9));
  BurstModel sn = flat;
  sn.base = BurstBase::SpaceNormal;
  CHECK(burst_total_mass(sn) == doctest::Approx(600.0 * 0.9753155785).epsilon(1e-9));

  CHECK_THROWS_AS(burst_intensity(BurstModel{BurstBase::Uniform, -1.0}, 0, 0, 0),
                  data_error);
}

TEST_CASE("burst calibration hits the target count") {
  for (BurstBase base : {BurstBase::Uniform, BurstBase::TimeNormal,
                         BurstBase::SpaceNormal, BurstBase::Both}) {
    for (double gamma : {0.0, 25.0, 100.0, 200.0}) {
      BurstModel m = calibrate_burst(base, gamma);
      CHECK(burst_total_mass(m) == doctest::Approx(600.0).epsilon(1e-9));
      CHECK(m.gamma == gamma);
    }
  }
  // Closed-form check for the time-normal base at gamma 25.
  BurstModel m = calibrate_burst(BurstBase::TimeNormal, 25.0);
  CHECK(m.nu == doctest::Approx(607.231720).epsilon(1e-6));
  BurstModel u0 = calibrate_burst(BurstBase::Uniform, 0.0);
  CHECK(u0.nu == doctest::Approx(600.0).epsilon(1e-12));

  CHECK(burst_total_mass(calibrate_burst(BurstBase::Both, 50.0, 250.0)) ==
        doctest::Approx(250.0).epsilon(1e-9));
  // gamma beyond nu/2 is rejected after calibration.
  CHECK_THROWS_AS(calibrate_burst(BurstBase::Uniform, 400.0), data_error);
  CHECK_THROWS_AS(calibrate_burst(BurstBase::Uniform, 0.0, -5.0), data_error);
}

TEST_CASE("burst simulation is deterministic and in-window") {
  BurstModel m = calibrate_burst(BurstBase::Both, 100.0);
  Rng a(7), b(7), c(8);
  PointPattern pa = simulate_burst(m, a);
  PointPattern pb = simulate_burst(m, b);
  PointPattern pc = simulate_burst(m, c);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa.points()[i].x == pb.points()[i].x);
    CHECK(pa.points()[i].t == pb.points()[i].t);
    CHECK(pa.window().contains(pa.points()[i]));
  }
  CHECK((pc.size() != pa.size() || pc.points()[0].x != pa.points()[0].x));
  CHECK(pa.size() > 400);
  CHECK(pa.size() < 850);
}

TEST_CASE("thinning validates the dominating rate") {
  Rng rng(3);
  CHECK_THROWS_AS(simulate_thinned_poisson([](double, double, double) { return 2.0; },
                                           1.0, Window::unit_cube(), rng),
                  data_error);
  CHECK_THROWS_AS(simulate_thinned_poisson([](double, double, double) { return 1.0; },
                                           0.0, Window::unit_cube(), rng),
                  data_error);

  // Homogeneous sampling matches the expected count on average.
  double total = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    Rng rr = Rng::for_replicate(99, r);
    total += static_cast<double>(
        simulate_thinned_poisson([](double, double, double) { return 100.0; },
                                 100.0, Window::unit_cube(), rr)
            .size());
  }
  CHECK(total / reps == doctest::Approx(100.0).epsilon(0.03));
}

TEST_CASE("gaussian field covariance building blocks") {
  Grid3 g = build_grid(Window::unit_cube(), 3, 3, 4);
  Eigen::MatrixXd cs = spatial_gaussian_cov(g, 0.06);
  REQUIRE(cs.rows() == 9);
  CHECK(cs.diagonal().isApproxToConstant(1.0));
  CHECK(cs.isApprox(cs.transpose()));
  const double d2 = g.dx * g.dx;
  CHECK(cs(0, 1) == doctest::Approx(std::exp(-d2 / 0.06)).epsilon(1e-12));

  Eigen::MatrixXd ct = temporal_exponential_cov(g, 0.05);
  REQUIRE(ct.rows() == 4);
  CHECK(ct(0, 1) == doctest::Approx(std::exp(-g.dt / 0.05)).epsilon(1e-12));
  CHECK(ct(0, 3) == doctest::Approx(std::exp(-3 * g.dt / 0.05)).epsilon(1e-12));

  CHECK_THROWS_AS(spatial_gaussian_cov(g, 0.0), data_error);

  Eigen::MatrixXd l = cholesky_with_jitter(cs);
  CHECK((l * l.transpose() - cs).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(l(0, 1) == 0.0);
}

TEST_CASE("kronecker product and factor identity") {
  Eigen::MatrixXd a(2, 2), b(2, 3);
  a << 1, 2, 3, 4;
  b << 0, 1, 2, 3, 4, 5;
  Eigen::MatrixXd k = kronecker(a, b);
  REQUIRE(k.rows() == 4);
  REQUIRE(k.cols() == 6);
  CHECK(k(0, 4) == doctest::Approx(2 * 1));  // a(0,1) * b(0,1)
  CHECK(k(3, 5) == doctest::Approx(4 * 5));
  CHECK(k(2, 1) == doctest::Approx(3 * 1));

  // chol(A (x) B) = chol(A) (x) chol(B) for SPD factors.
  Rng rng(12);
  Eigen::MatrixXd m1(3, 3), m2(4, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m1(i, j) = rng.normal();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m2(i, j) = rng.normal();
  Eigen::MatrixXd s1 = m1 * m1.transpose() + 0.5 * Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd s2 = m2 * m2.transpose() + 0.5 * Eigen::MatrixXd::Identity(4, 4);
  Eigen::MatrixXd lk = cholesky_with_jitter(kronecker(s1, s2), 0.0);
  Eigen::MatrixXd kl =
      kronecker(cholesky_with_jitter(s1, 0.0), cholesky_with_jitter(s2, 0.0));
  CHECK((lk - kl).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kronecker-structured field sampling") {
  Grid3 g = build_grid(Window::unit_cube(), 4, 4, 5);
  Eigen::MatrixXd c1 = spatial_gaussian_cov(g, 0.1);
  Eigen::MatrixXd c2 = temporal_exponential_cov(g, 0.3);
  Rng r1(31), r2(31);
  Eigen::MatrixXd z1 = simulate_grf_kronecker(c1, c2, r1);
  Eigen::MatrixXd z2 = simulate_grf_prefactored(cholesky_with_jitter(c1),
                                                cholesky_with_jitter(c2), r2);
  REQUIRE(z1.rows() == 16);
  REQUIRE(z1.cols() == 5);
  CHECK((z1 - z2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lgcp simulation") {
  LgcpModel m;
  m.nx = m.ny = 10;
  m.nt = 8;
  Window w = Window::unit_cube();
  LgcpFactors f = make_lgcp_factors(m, w);
  CHECK(f.l_space.rows() == 100);
  CHECK(f.l_time.rows() == 8);
  CHECK(f.grid.nx == 10);

  Rng a(5), b(5);
  LgcpRealization ra = simulate_lgcp(m, w, a);
  LgcpRealization rb = simulate_lgcp(m, w, b, &f);
  REQUIRE(ra.pattern.size() == rb.pattern.size());
  for (std::size_t i = 0; i < ra.pattern.size(); ++i) {
    CHECK(ra.pattern.points()[i].x == rb.pattern.points()[i].x);
    CHECK(ra.pattern.points()[i].t == rb.pattern.points()[i].t);
  }
  CHECK(ra.log_lambda.rows() == 100);
  CHECK(ra.log_lambda.cols() == 8);
  for (const PointST& q : ra.pattern.points()) CHECK(w.contains(q));

  // Mean count across replicates near the analytic expectation (201.4).
  double total = 0.0;
  const int reps = 60;
  for (int r = 0; r < reps; ++r) {
    Rng rr = Rng::for_replicate(1234, r);
    total += static_cast<double>(simulate_lgcp(m, w, rr, &f).pattern.size());
  }
  CHECK(total / reps == doctest::Approx(201.4).epsilon(0.15));
}

TEST_CASE("poisson sampling on a grid") {
  Grid3 g = build_grid(Window::unit_cube(), 6, 6, 4);
  Eigen::MatrixXd lam = Eigen::MatrixXd::Constant(36, 4, 150.0);
  Rng a(2), b(2);
  PointPattern pa = sample_poisson_on_grid(g, lam, Window::unit_cube(), a);
  PointPattern pb = sample_poisson_on_grid(g, lam, Window::unit_cube(), b);
  CHECK(pa.size() == pb.size());
  CHECK(pa.size() > 90);
  CHECK(pa.size() < 220);
  for (const PointST& q : pa.points()) CHECK(pa.window().contains(q));

  Rng c(3);
  CHECK(sample_poisson_on_grid(g, Eigen::MatrixXd::Zero(36, 4),
                               Window::unit_cube(), c)
            .size() == 0);
  CHECK_THROWS_AS(sample_poisson_on_grid(g, Eigen::MatrixXd::Zero(5, 4),
                                         Window::unit_cube(), c),
                  data_error);

  // Polygon windows resample until the draw lands inside.
  Window ell =
      Window::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, 0, 1);
  Grid3 pg = build_grid(ell, 8, 8, 3);
  Eigen::MatrixXd plam = Eigen::MatrixXd::Constant(64, 3, 60.0);
  Rng d(4);
  PointPattern pp = sample_poisson_on_grid(pg, plam, ell, d);
  CHECK(pp.size() > 0);
  for (const PointST& q : pp.points()) CHECK(ell.contains(q));
}
