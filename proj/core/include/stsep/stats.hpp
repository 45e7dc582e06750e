#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stsep/kernels.hpp"

namespace stsep {

enum class Statistic { S, SSpace, STime, SDev };

std::string statistic_name(Statistic s);
Statistic statistic_from_name(const std::string& name);

// A test function evaluated over its retained support, flattened in a
// fixed cell order. Coordinate vectors describe the support: S has
// (x, y, t) per element, SSpace has (x, y), STime has (t).
struct FunctionSample {
  Statistic stat = Statistic::S;
  std::vector<double> values;
  std::vector<double> x, y, t;
};

// Raw forms shared with the Monte Carlo engines: evaluate a replicate
// space-time estimate against a fixed separable baseline and validity
// mask (the mask is always the one frozen from the data estimate).
// `valid` uses the IntensityField layout: cell (s, it) at s + S*it.

// S = rho_st / rho_sep on valid cells, in mask order.
std::vector<double> s_values(const Eigen::MatrixXd& rho_st,
                             const Eigen::MatrixXd& rho_sep,
                             const std::vector<std::uint8_t>& valid);

// Integral of S over W per retained time slice (slices with any valid cell).
std::vector<double> s_time_values(const Eigen::MatrixXd& rho_st,
                                  const Eigen::MatrixXd& rho_sep,
                                  const std::vector<std::uint8_t>& valid,
                                  const Grid3& grid);

// Integral of S over T per retained spatial cell.
std::vector<double> s_space_values(const Eigen::MatrixXd& rho_st,
                                   const Eigen::MatrixXd& rho_sep,
                                   const std::vector<std::uint8_t>& valid,
                                   const Grid3& grid);

// Integral of |rho_st - rho_sep| over valid cells (midpoint sum).
double s_deviation_value(const Eigen::MatrixXd& rho_st,
                         const Eigen::MatrixXd& rho_sep,
                         const std::vector<std::uint8_t>& valid,
                         const Grid3& grid);

FunctionSample compute_S(const IntensityField& f);
FunctionSample compute_S_time(const IntensityField& f);
FunctionSample compute_S_space(const IntensityField& f);
double compute_S_d(const IntensityField& f);

// Dispatch by statistic; SDev yields a single-element vector/sample.
std::vector<double> statistic_values(Statistic st,
                                     const Eigen::MatrixXd& rho_st,
                                     const Eigen::MatrixXd& rho_sep,
                                     const std::vector<std::uint8_t>& valid,
                                     const Grid3& grid);
FunctionSample statistic_sample(Statistic st, const IntensityField& f);

}  // namespace stsep
