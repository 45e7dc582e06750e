#include "stsep/stats.hpp"

#include <cfloat>
#include <cmath>

#include "stsep/errors.hpp"

namespace stsep {

namespace {

// Replicate separable estimates can vanish on cells the data mask keeps;
// the floor keeps ratios finite while preserving their extreme ranks.
inline double safe_div(double num, double den) {
  return num / std::max(den, DBL_MIN);
}

}  // namespace

std::string statistic_name(Statistic s) {
  switch (s) {
    case Statistic::S: return "S";
    case Statistic::SSpace: return "S_space";
    case Statistic::STime: return "S_time";
    case Statistic::SDev: return "S_d";
  }
  return "S";
}

Statistic statistic_from_name(const std::string& name) {
  if (name == "S") return Statistic::S;
  if (name == "S_space" || name == "Sspace") return Statistic::SSpace;
  if (name == "S_time" || name == "Stime") return Statistic::STime;
  if (name == "S_d" || name == "Sd") return Statistic::SDev;
  throw data_error("unknown statistic: " + name);
}

std::vector<double> s_values(const Eigen::MatrixXd& rho_st,
                             const Eigen::MatrixXd& rho_sep,
                             const std::vector<std::uint8_t>& valid) {
  const Eigen::Index S = rho_st.rows(), T = rho_st.cols();
  std::vector<double> out;
  out.reserve(valid.size());
  for (Eigen::Index it = 0; it < T; ++it)
    for (Eigen::Index s = 0; s < S; ++s)
      if (valid[static_cast<std::size_t>(it) * S + s])
        out.push_back(safe_div(rho_st(s, it), rho_sep(s, it)));
  return out;
}

std::vector<double> s_time_values(const Eigen::MatrixXd& rho_st,
                                  const Eigen::MatrixXd& rho_sep,
                                  const std::vector<std::uint8_t>& valid,
                                  const Grid3& grid) {
  const Eigen::Index S = rho_st.rows(), T = rho_st.cols();
  const double da = grid.cell_area();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index it = 0; it < T; ++it) {
    double acc = 0.0;
    bool any = false;
    for (Eigen::Index s = 0; s < S; ++s) {
      if (!valid[static_cast<std::size_t>(it) * S + s]) continue;
      acc += safe_div(rho_st(s, it), rho_sep(s, it));
      any = true;
    }
    if (any) out.push_back(acc * da);
  }
  return out;
}

std::vector<double> s_space_values(const Eigen::MatrixXd& rho_st,
                                   const Eigen::MatrixXd& rho_sep,
                                   const std::vector<std::uint8_t>& valid,
                                   const Grid3& grid) {
  const Eigen::Index S = rho_st.rows(), T = rho_st.cols();
  std::vector<double> out;
  for (Eigen::Index s = 0; s < S; ++s) {
    double acc = 0.0;
    bool any = false;
    for (Eigen::Index it = 0; it < T; ++it) {
      if (!valid[static_cast<std::size_t>(it) * S + s]) continue;
      acc += safe_div(rho_st(s, it), rho_sep(s, it));
      any = true;
    }
    if (any) out.push_back(acc * grid.dt);
  }
  return out;
}

double s_deviation_value(const Eigen::MatrixXd& rho_st,
                         const Eigen::MatrixXd& rho_sep,
                         const std::vector<std::uint8_t>& valid,
                         const Grid3& grid) {
  const Eigen::Index S = rho_st.rows(), T = rho_st.cols();
  double acc = 0.0;
  for (Eigen::Index it = 0; it < T; ++it)
    for (Eigen::Index s = 0; s < S; ++s)
      if (valid[static_cast<std::size_t>(it) * S + s])
        acc += std::abs(rho_st(s, it) - rho_sep(s, it));
  return acc * grid.cell_volume();
}

FunctionSample compute_S(const IntensityField& f) {
  FunctionSample fs;
  fs.stat = Statistic::S;
  fs.values = s_values(f.rho_st, f.rho_sep, f.valid);
  if (fs.values.empty()) throw data_error("degenerate field");
  fs.x.reserve(fs.values.size());
  fs.y.reserve(fs.values.size());
  fs.t.reserve(fs.values.size());
  const int S = f.grid.spatial_cells();
  for (int it = 0; it < f.grid.nt; ++it)
    for (int s = 0; s < S; ++s)
      if (f.valid[static_cast<std::size_t>(it) * S + s]) {
        fs.x.push_back(f.grid.xs[s % f.grid.nx]);
        fs.y.push_back(f.grid.ys[s / f.grid.nx]);
        fs.t.push_back(f.grid.ts[it]);
      }
  return fs;
}

FunctionSample compute_S_time(const IntensityField& f) {
  FunctionSample fs;
  fs.stat = Statistic::STime;
  fs.values = s_time_values(f.rho_st, f.rho_sep, f.valid, f.grid);
  const int S = f.grid.spatial_cells();
  for (int it = 0; it < f.grid.nt; ++it) {
    bool any = false;
    for (int s = 0; s < S && !any; ++s)
      any = f.valid[static_cast<std::size_t>(it) * S + s] != 0;
    if (any) fs.t.push_back(f.grid.ts[it]);
  }
  return fs;
}

FunctionSample compute_S_space(const IntensityField& f) {
  FunctionSample fs;
  fs.stat = Statistic::SSpace;
  fs.values = s_space_values(f.rho_st, f.rho_sep, f.valid, f.grid);
  const int S = f.grid.spatial_cells();
  for (int s = 0; s < S; ++s) {
    bool any = false;
    for (int it = 0; it < f.grid.nt && !any; ++it)
      any = f.valid[static_cast<std::size_t>(it) * S + s] != 0;
    if (any) {
      fs.x.push_back(f.grid.xs[s % f.grid.nx]);
      fs.y.push_back(f.grid.ys[s / f.grid.nx]);
    }
  }
  return fs;
}

double compute_S_d(const IntensityField& f) {
  return s_deviation_value(f.rho_st, f.rho_sep, f.valid, f.grid);
}

std::vector<double> statistic_values(Statistic st,
                                     const Eigen::MatrixXd& rho_st,
                                     const Eigen::MatrixXd& rho_sep,
                                     const std::vector<std::uint8_t>& valid,
                                     const Grid3& grid) {
  switch (st) {
    case Statistic::S: return s_values(rho_st, rho_sep, valid);
    case Statistic::STime: return s_time_values(rho_st, rho_sep, valid, grid);
    case Statistic::SSpace:
      return s_space_values(rho_st, rho_sep, valid, grid);
    case Statistic::SDev:
      return {s_deviation_value(rho_st, rho_sep, valid, grid)};
  }
  return {};
}

FunctionSample statistic_sample(Statistic st, const IntensityField& f) {
  switch (st) {
    case Statistic::S: return compute_S(f);
    case Statistic::STime: return compute_S_time(f);
    case Statistic::SSpace: return compute_S_space(f);
    case Statistic::SDev: {
      FunctionSample fs;
      fs.stat = Statistic::SDev;
      fs.values = {compute_S_d(f)};
      return fs;
    }
  }
  return {};
}

}  // namespace stsep
