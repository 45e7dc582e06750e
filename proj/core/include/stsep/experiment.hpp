#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stsep/chisq.hpp"
#include "stsep/permutation.hpp"
#include "stsep/sim.hpp"

namespace stsep {

enum class ExperimentModel { Burst, Lgcp };

// Repeated simulate-test cycles, one row per swept parameter value:
// burst sweeps the burst weight gamma (nu recalibrated so the expected
// count stays at target_n), LGCP sweeps the interaction weight
// gamma_dprime. Every repetition runs the permutation battery once (all
// statistics share one permutation set) and optionally the chi-square
// test; a row reports per-test rejection proportions at test.alpha.
struct ExperimentConfig {
  ExperimentModel model = ExperimentModel::Burst;
  BurstBase burst_base = BurstBase::Uniform;
  double target_n = 600.0;
  double base_sd = 0.2;
  double burst_sd = 0.05;
  LgcpModel lgcp;
  Window window = Window::unit_cube();
  std::vector<double> sweep{0.0};
  int repetitions = 1000;
  PermTestConfig test;  // n_perm, alpha, grid, bandwidths; seed unused
  std::vector<Statistic> statistics{Statistic::S, Statistic::SSpace,
                                    Statistic::STime, Statistic::SDev};
  bool run_chisq = true;
  int chisq_kx = 4, chisq_ky = 4, chisq_kt = 4;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct ExperimentRow {
  std::string model;
  double sweep_value = 0.0;
  double mean_n = 0.0;
  int repetitions = 0;
  std::vector<double> rejection;  // aligned with cfg.statistics
  double chisq_rejection = 0.0;
};

// Deterministic in (seed, config) regardless of thread count; zero
// repetitions yield an empty table.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);

std::string format_experiment_table(const ExperimentConfig& cfg,
                                    const std::vector<ExperimentRow>& rows);

}  // namespace stsep
