#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace stsep {

// Two-sided pointwise ranks. Entry (i, j) is
// min(#{i': S_i'j <= S_ij}, #{i': S_i'j >= S_ij}), counts inclusive of i
// itself, so 1 marks the most extreme sample in a column and a fully
// tied column gives everyone rank n+1.
using RankMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// samples: one row per functional sample, row 0 = data.
RankMatrix pointwise_ranks(const Eigen::MatrixXd& samples);

// Extreme rank length measure: M_i = #{i': R_i' strictly lex-precedes
// R_i} / (n+1), computed on ascending-sorted rank vectors. Small M =
// extreme sample.
Eigen::VectorXd erl_measures(const RankMatrix& ranks);

struct EnvelopeResult {
  std::vector<double> data;   // row 0 of the sample matrix
  std::vector<double> low;
  std::vector<double> upp;
  std::vector<double> measures;
  double m_alpha = 0.0;
  double p_value = 1.0;
  double alpha = 0.0;
  std::vector<std::uint8_t> above;  // data strictly above upp
  std::vector<std::uint8_t> below;  // data strictly below low

  // -1 below, 0 inside, +1 above, per support element.
  std::vector<int> exit_codes() const;
};

// Global envelope at level alpha: retain samples whose measure is >= the
// largest measure value m_alpha with #{M_i < m_alpha} <= alpha*(n+1);
// envelope bounds are columnwise min/max over the retained set.
EnvelopeResult global_envelope(const Eigen::MatrixXd& samples,
                               const Eigen::VectorXd& measures, double alpha);

// p = #{i: M_i <= M_data} / (n+1); ties count in full.
double mc_pvalue(const Eigen::VectorXd& measures, int data_index = 0);

// One-sided deviation p-value: p = #{i: v_i >= v_data} / (n+1).
double deviation_pvalue(const std::vector<double>& stats, int data_index = 0);

}  // namespace stsep
