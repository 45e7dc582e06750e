#include "stsep/chisq.hpp"

#include <algorithm>
#include <cmath>

#include "stsep/errors.hpp"
#include "stsep/quantile.hpp"

namespace stsep {

std::vector<double> quantile_partition(std::vector<double> values, int k) {
  if (k < 1) throw data_error("partition needs k >= 1");
  if (values.empty()) throw data_error("empty sample");
  std::sort(values.begin(), values.end());
  std::vector<double> bounds;
  bounds.reserve(static_cast<std::size_t>(k) - 1);
  for (int j = 1; j < k; ++j)
    bounds.push_back(
        empirical_quantile(values, static_cast<double>(j) / k));
  return bounds;
}

int partition_cell(double v, const std::vector<double>& boundaries) {
  // First cell is (-inf, b1], later cells (b_{j-1}, b_j].
  auto it = std::lower_bound(boundaries.begin(), boundaries.end(), v);
  return static_cast<int>(it - boundaries.begin());
}

namespace {

constexpr int kMaxIter = 1000000;
constexpr double kEps = 1e-16;

// Regularized lower incomplete gamma P(a, x) by power series.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw numeric_error("incomplete gamma series failed to converge");
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction
// (modified Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw numeric_error("incomplete gamma continued fraction failed to converge");
}

}  // namespace

double chisq_tail(double x, int df) {
  if (df < 1) throw data_error("degrees of freedom must be >= 1");
  if (!(x >= 0.0)) throw data_error("chi-square statistic must be >= 0");
  if (x == 0.0) return 1.0;
  const double a = 0.5 * df;
  const double xx = 0.5 * x;
  if (xx < a + 1.0) return 1.0 - gamma_p_series(a, xx);
  return gamma_q_cf(a, xx);
}

ChiSqResult chisq_from_counts(Eigen::MatrixXd counts) {
  const int I = static_cast<int>(counts.rows());
  const int J = static_cast<int>(counts.cols());
  if (I < 2 || J < 2) throw data_error("contingency table needs 2x2 cells");
  const double n = counts.sum();
  if (!(n > 0.0)) throw data_error("empty contingency table");

  ChiSqResult res;
  res.counts = std::move(counts);
  Eigen::VectorXd row = res.counts.rowwise().sum();
  Eigen::VectorXd col = res.counts.colwise().sum().transpose();
  res.expected = row * col.transpose() / n;

  int small = 0;
  res.statistic = 0.0;
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) {
      const double e = res.expected(i, j);
      if (e <= 0.0) throw data_error("empty margin in contingency table");
      const double diff = res.counts(i, j) - e;
      res.statistic += diff * diff / e;
      if (e < 5.0) ++small;
    }
  }
  res.small_expected_warning = small * 5 > I * J;
  res.df = (I - 1) * (J - 1);
  res.p_value = chisq_tail(res.statistic, res.df);
  return res;
}

ChiSqResult chisq_test(const PointPattern& p, int kx, int ky, int kt) {
  if (kx < 1 || ky < 1 || kt < 1) throw data_error("partition needs k >= 1");
  const std::size_t n = p.size();
  if (n < static_cast<std::size_t>(kx) * ky * kt)
    throw data_error("fewer points than cells");

  std::vector<double> bounds_x = quantile_partition(p.xs(), kx);
  std::vector<double> bounds_y = quantile_partition(p.ys(), ky);
  std::vector<double> bounds_t = quantile_partition(p.ts(), kt);

  const int I = kx * ky, J = kt;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(I, J);
  for (const PointST& pt : p.points()) {
    int cx = partition_cell(pt.x, bounds_x);
    int cy = partition_cell(pt.y, bounds_y);
    int ct = partition_cell(pt.t, bounds_t);
    counts(cy * kx + cx, ct) += 1.0;
  }

  ChiSqResult res = chisq_from_counts(std::move(counts));
  res.bounds_x = std::move(bounds_x);
  res.bounds_y = std::move(bounds_y);
  res.bounds_t = std::move(bounds_t);
  return res;
}

}  // namespace stsep
