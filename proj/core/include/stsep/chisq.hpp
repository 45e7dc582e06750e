#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stsep/geometry.hpp"

namespace stsep {

// Interior boundaries of a k-cell quantile partition (the j/k empirical
// quantiles, j = 1..k-1). Cells are left-open right-closed except the
// first, so ties fall in the lower cell.
std::vector<double> quantile_partition(std::vector<double> values, int k);

// Cell index in [0, k) for a value given the interior boundaries.
int partition_cell(double v, const std::vector<double>& boundaries);

// Upper tail P(X > x) of the chi-square distribution with df degrees of
// freedom, via the regularized incomplete gamma function (series /
// continued fraction).
double chisq_tail(double x, int df);

struct ChiSqResult {
  Eigen::MatrixXd counts;    // I x J: spatial cell x temporal cell
  Eigen::MatrixXd expected;  // e_ij = row_i * col_j / n
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  // Set when more than a fifth of expected counts fall below 5; the
  // asymptotic reference distribution is then questionable.
  bool small_expected_warning = false;
  std::vector<double> bounds_x, bounds_y, bounds_t;
};

// Independence test on a ready-made I x J contingency table.
ChiSqResult chisq_from_counts(Eigen::MatrixXd counts);

// Chi-square test of independence between the spatial cell (product of
// kx x-quantile and ky y-quantile cells, I = kx*ky) and the temporal
// cell (kt t-quantile cells).
ChiSqResult chisq_test(const PointPattern& p, int kx, int ky, int kt);

}  // namespace stsep
