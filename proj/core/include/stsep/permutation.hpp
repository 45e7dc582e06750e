#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "stsep/envelope.hpp"
#include "stsep/rng.hpp"
#include "stsep/stats.hpp"

namespace stsep {

std::vector<std::uint32_t> random_permutation(std::size_t n, Rng& rng);

// Reassigns the observed times to the observed locations by a uniformly
// random permutation; both coordinate multisets are unchanged.
PointPattern permute_times(const PointPattern& p, Rng& rng);

struct PermTestConfig {
  Statistic statistic = Statistic::S;
  int n_perm = 999;
  double alpha = 0.05;
  int nx = 25, ny = 25, nt = 20;
  // Fixed bandwidths if set; otherwise selected from the data by
  // bw_method (marginal selectors are permutation invariant, so the
  // choice does not break exchangeability).
  std::optional<Bandwidths> bandwidths;
  BandwidthMethod bw_method = BandwidthMethod::RuleOfThumb;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  EstimateOptions estimate;
};

struct MonteCarloTestResult {
  Statistic statistic = Statistic::S;
  double p_value = 1.0;
  double alpha = 0.05;
  int n_perm = 0;
  std::uint64_t seed = 0;
  std::array<int, 3> grid_dims{0, 0, 0};
  Bandwidths bandwidths;
  // Envelope statistics (S, S_space, S_time) carry the global envelope;
  // the deviation statistic carries the replicate values, data first.
  std::optional<EnvelopeResult> envelope;
  std::vector<double> deviation_stats;
  FunctionSample data_sample;
};

// All statistics are evaluated on the same permutation set; bandwidths,
// grid and validity mask are frozen from the data estimate.
std::vector<MonteCarloTestResult> run_permutation_battery(
    const PointPattern& p, const PermTestConfig& cfg,
    const std::vector<Statistic>& stats);

MonteCarloTestResult run_permutation_test(const PointPattern& p,
                                           const PermTestConfig& cfg);

}  // namespace stsep
