#include "stsep/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stsep/errors.hpp"

namespace stsep {

RankMatrix pointwise_ranks(const Eigen::MatrixXd& samples) {
  const Eigen::Index m = samples.rows(), d = samples.cols();
  if (m < 1 || d < 1) throw data_error("empty sample matrix");
  RankMatrix ranks(m, d);
  std::vector<double> col(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) col[i] = samples(i, j);
    std::sort(col.begin(), col.end());
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = samples(i, j);
      auto lo = std::lower_bound(col.begin(), col.end(), v);
      auto hi = std::upper_bound(col.begin(), col.end(), v);
      const int le = static_cast<int>(hi - col.begin());
      const int ge = static_cast<int>(col.end() - lo);
      ranks(i, j) = std::min(le, ge);
    }
  }
  return ranks;
}

Eigen::VectorXd erl_measures(const RankMatrix& ranks) {
  const Eigen::Index m = ranks.rows(), d = ranks.cols();
  std::vector<std::vector<int>> sorted(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& row = sorted[i];
    row.resize(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) row[j] = ranks(i, j);
    std::sort(row.begin(), row.end());
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return sorted[a] < sorted[b]; });
  // Ties share the count of strictly preceding vectors.
  Eigen::VectorXd measures(m);
  std::size_t group_start = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && sorted[order[i]] != sorted[order[i - 1]]) group_start = i;
    measures[order[i]] = static_cast<double>(group_start) / m;
  }
  return measures;
}

EnvelopeResult global_envelope(const Eigen::MatrixXd& samples,
                               const Eigen::VectorXd& measures, double alpha) {
  const Eigen::Index m = samples.rows(), d = samples.cols();
  if (measures.size() != m) throw data_error("measure count mismatch");
  if (!(alpha > 0.0 && alpha < 1.0)) throw data_error("alpha must be in (0,1)");
  if (m < static_cast<Eigen::Index>(std::ceil(1.0 / alpha)))
    throw data_error("insufficient replicates for level");

  // m_alpha: largest measure value whose strict-predecessor count stays
  // within alpha*(n+1).
  std::vector<double> ms(measures.data(), measures.data() + m);
  std::sort(ms.begin(), ms.end());
  const double budget = alpha * static_cast<double>(m) + 1e-9;
  double m_alpha = ms.front();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (i > 0 && ms[i] == ms[i - 1]) continue;
    if (static_cast<double>(i) <= budget) m_alpha = ms[i];
  }

  EnvelopeResult res;
  res.alpha = alpha;
  res.m_alpha = m_alpha;
  res.measures.assign(measures.data(), measures.data() + m);
  res.p_value = mc_pvalue(measures, 0);
  res.data.resize(static_cast<std::size_t>(d));
  res.low.assign(static_cast<std::size_t>(d), 0.0);
  res.upp.assign(static_cast<std::size_t>(d), 0.0);
  res.above.assign(static_cast<std::size_t>(d), 0);
  res.below.assign(static_cast<std::size_t>(d), 0);

  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (measures[i] < m_alpha) continue;
      lo = std::min(lo, samples(i, j));
      hi = std::max(hi, samples(i, j));
    }
    res.low[j] = lo;
    res.upp[j] = hi;
    const double v = samples(0, j);
    res.data[j] = v;
    if (v > hi) res.above[j] = 1;
    if (v < lo) res.below[j] = 1;
  }
  return res;
}

std::vector<int> EnvelopeResult::exit_codes() const {
  std::vector<int> codes(data.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i)
    codes[i] = above[i] ? 1 : (below[i] ? -1 : 0);
  return codes;
}

double mc_pvalue(const Eigen::VectorXd& measures, int data_index) {
  const Eigen::Index m = measures.size();
  if (data_index < 0 || data_index >= m) throw data_error("bad data index");
  const double md = measures[data_index];
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < m; ++i) count += (measures[i] <= md);
  return static_cast<double>(count) / static_cast<double>(m);
}

double deviation_pvalue(const std::vector<double>& stats, int data_index) {
  if (stats.empty() || data_index < 0 ||
      data_index >= static_cast<int>(stats.size()))
    throw data_error("bad data index");
  const double vd = stats[static_cast<std::size_t>(data_index)];
  std::size_t count = 0;
  for (double v : stats) count += (v >= vd);
  return static_cast<double>(count) / static_cast<double>(stats.size());
}

}  // namespace stsep
