#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "stsep/geometry.hpp"

namespace stsep {

// Kernel evaluations are cut off beyond this many bandwidths per axis;
// the discarded Gaussian mass is below 1.3e-15.
inline constexpr double kKernelCutoff = 8.0;

struct Bandwidths {
  double space = 0.0;
  double time = 0.0;
};

enum class Axis { Space, Time };
enum class BandwidthMethod { RuleOfThumb, LikelihoodCV };

// Gaussian kernel scaled as k_b(v) = k(v/b) / b^d.
double gaussian_kernel(double v, double b);                // d = 1
double gaussian_kernel(double vx, double vy, double b);    // d = 2

// Midpoint quadrature nodes over the bounding box of W, masked by W.
struct QuadratureGrid {
  std::vector<double> xs, ys;
  double dx = 0.0, dy = 0.0;
  std::vector<std::uint8_t> inside;  // xs.size()*ys.size(), row-major (ix, iy)
  bool all_inside = true;

  bool node_inside(std::size_t ix, std::size_t iy) const {
    return all_inside || inside[iy * xs.size() + ix] != 0;
  }
};

// Dimensions below 10x10 raise "insufficient quadrature grid".
QuadratureGrid make_quadrature_grid(const Window& w, int qnx, int qny);

// C_{W,eps}(u) = integral over W of k2_eps(v - u) dv, in (0, 1].
double edge_correction_space(double x, double y, double eps,
                             const QuadratureGrid& q);
double edge_correction_space(double x, double y, const Window& w, double eps,
                             int qnx, int qny);

// C_{T,delta}(t) = integral over [t0, t1] of k1_delta(s - t) ds, in (0, 1].
double edge_correction_time(double t, double t0, double t1, double delta,
                            int qnt);

struct EstimateOptions {
  // Edge-correction quadrature runs on this refinement of the evaluation
  // grid (midpoint rule on refine*nx x refine*ny nodes inside W).
  int quad_refine = 4;
};

// Per-point corrected kernel profiles on the grid axes. The space-time
// estimate of any reassignment of times to locations is
// spatial * P * temporal for a permutation matrix P, which is what the
// permutation test exploits.
struct KernelBasis {
  Eigen::MatrixXd spatial;     // (nx*ny) x n, column i: k2(u - u_i)/C_W(u_i)
  Eigen::MatrixXd temporal;    // n x nt,     row i:    k1(t - t_i)/C_T(t_i)
  Eigen::VectorXd corr_space;  // C_W(u_i)
  Eigen::VectorXd corr_time;   // C_T(t_i)
};

KernelBasis compute_kernel_basis(const PointPattern& p, const Bandwidths& bw,
                                 const Grid3& grid,
                                 const EstimateOptions& opt = {});

// All first-order estimates of one pattern on one grid, plus the validity
// mask (cell center inside W and all three estimates above the relative
// floor 1e-12 * n / |W x T|).
struct IntensityField {
  Grid3 grid;
  int n = 0;
  Bandwidths bw;
  Eigen::MatrixXd rho_st;     // (nx*ny) x nt
  Eigen::VectorXd rho_space;  // nx*ny
  Eigen::VectorXd rho_time;   // nt
  Eigen::MatrixXd rho_sep;    // (nx*ny) x nt, outer(rho_space, rho_time)/n
  std::vector<std::uint8_t> valid;  // (nx*ny)*nt, index s + (nx*ny)*it
  double mask_threshold = 0.0;
  double window_area = 0.0;
  double time_length = 0.0;

  bool cell_valid(int s, int it) const {
    return valid[static_cast<std::size_t>(it) * grid.spatial_cells() + s] != 0;
  }
  double mass_space() const;
  double mass_time() const;
  double mass_st() const;
  double mass_sep() const;
};

Eigen::VectorXd estimate_rho_space(const PointPattern& p, double eps,
                                   const Grid3& grid,
                                   const EstimateOptions& opt = {});
Eigen::VectorXd estimate_rho_time(const PointPattern& p, double delta,
                                  const Grid3& grid,
                                  const EstimateOptions& opt = {});
IntensityField estimate_rho_st(const PointPattern& p, const Bandwidths& bw,
                               const Grid3& grid,
                               const EstimateOptions& opt = {});
Eigen::MatrixXd estimate_rho_sep(const PointPattern& p, const Bandwidths& bw,
                                 const Grid3& grid,
                                 const EstimateOptions& opt = {});

// Builds the field (and mask) from an already computed basis.
IntensityField field_from_basis(const KernelBasis& basis, const PointPattern& p,
                                const Bandwidths& bw, const Grid3& grid);

enum class ConditionalMode { SpaceGivenTime, TimeGivenSpace };

struct ConditionalField {
  Eigen::MatrixXd values;            // (nx*ny) x nt
  std::vector<std::uint8_t> defined; // same layout as IntensityField::valid
};

ConditionalField conditional_intensity(const IntensityField& field,
                                       ConditionalMode mode);

// 0.9 * min(sd, IQR/1.34) * m^(-1/5); both spread measures zero -> error.
double rule_of_thumb_bandwidth(std::vector<double> values);

double select_bandwidth(const PointPattern& p, Axis axis,
                        BandwidthMethod method = BandwidthMethod::RuleOfThumb);
Bandwidths select_bandwidths(const PointPattern& p,
                             BandwidthMethod method = BandwidthMethod::RuleOfThumb);

}  // namespace stsep
