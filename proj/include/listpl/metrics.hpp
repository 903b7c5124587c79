#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "listpl/letor_io.hpp"
#include "listpl/ranker_net.hpp"
#include "listpl/types.hpp"

namespace listpl {

/// Document indices sorted by descending predicted score; equal scores keep
/// their original order (stable, label-blind tie-break).
template <typename Derived>
std::vector<Index> rank_by_score(const Eigen::MatrixBase<Derived>& predicted) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const VectorX<Scalar>> s(predicted.derived());
  std::vector<Index> order(static_cast<std::size_t>(s.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return s(a) > s(b); });
  return order;
}

namespace detail {

inline double gain(int label) { return std::exp2(static_cast<double>(label)) - 1.0; }

inline double discount(Index rank) {  // rank is 0-based
  return std::log2(static_cast<double>(rank) + 2.0);
}

/// Two-sided tail of Student's t via the regularized incomplete beta
/// function: p = I_{nu/(nu+t^2)}(nu/2, 1/2).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// Exponential-gain nDCG at cutoff k: DCG uses (2^label - 1) / log2(rank+1)
/// over the top min(k, n) predicted ranks, normalized by the label-sorted
/// ideal. Absent when every label is zero (the ideal DCG vanishes).
template <typename Derived>
std::optional<double> ndcg_at_k(const Eigen::MatrixBase<Derived>& predicted,
                                const LabelVector& labels, int k) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("ndcg_at_k: length mismatch");
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  const Index n = labels.size();
  const Index depth = std::min<Index>(k, n);

  const std::vector<Index> order = rank_by_score(predicted);
  double dcg = 0.0;
  for (Index i = 0; i < depth; ++i) {
    dcg += detail::gain(labels(order[static_cast<std::size_t>(i)])) / detail::discount(i);
  }

  std::vector<int> ideal(labels.data(), labels.data() + n);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double ideal_dcg = 0.0;
  for (Index i = 0; i < depth; ++i) {
    ideal_dcg += detail::gain(ideal[static_cast<std::size_t>(i)]) / detail::discount(i);
  }

  if (ideal_dcg == 0.0) return std::nullopt;
  return dcg / ideal_dcg;
}

/// Mean nDCG@k of a model over every query where the metric is defined;
/// all-zero-label queries are excluded from numerator and denominator.
template <typename Scalar>
double mean_ndcg(const ModelParams<Scalar>& model, const Dataset<Scalar>& dataset, int k) {
  double total = 0.0;
  Index defined = 0;
  for (const QueryGroup<Scalar>& group : dataset.groups) {
    const VectorX<Scalar> scores = score_documents(model, group.features);
    if (const auto value = ndcg_at_k(scores, group.labels, k)) {
      total += *value;
      ++defined;
    }
  }
  if (defined == 0) throw DataError("mean_ndcg: no query has a nonzero label");
  return total / static_cast<double>(defined);
}

/// Paired two-tailed Student's t-test on the differences a - b. Degenerate
/// inputs resolve exactly: identical samples give p = 1, zero-variance
/// nonzero-mean differences give p = 0.
inline double two_tailed_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("two_tailed_t_test: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("two_tailed_t_test: need at least two paired samples");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);

  double variance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double centered = (a[i] - b[i]) - mean;
    variance += centered * centered;
  }
  variance /= static_cast<double>(n - 1);

  // Equal differences can leave rounding dust in the variance; snap it.
  const double eps = std::numeric_limits<double>::epsilon();
  if (variance <= 16.0 * eps * eps * mean * mean) {
    return mean == 0.0 ? 1.0 : 0.0;
  }

  const double t = mean / std::sqrt(variance / static_cast<double>(n));
  const double dof = static_cast<double>(n - 1);
  const double p = detail::regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace listpl
