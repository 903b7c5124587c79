#pragma once

// Test-only oracles. Each one computes its quantity straight from the
// defining formula, independently of the library code path it is used to
// check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "listpl/plackett_luce.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// nDCG by definition

inline double dcg_by_definition(const std::vector<int>& labels_in_rank_order, int k) {
  double total = 0.0;
  const std::size_t depth = std::min<std::size_t>(labels_in_rank_order.size(),
                                                  static_cast<std::size_t>(k));
  for (std::size_t position = 0; position < depth; ++position) {
    const double gain = std::pow(2.0, labels_in_rank_order[position]) - 1.0;
    total += gain / (std::log(static_cast<double>(position) + 2.0) / std::log(2.0));
  }
  return total;
}

inline std::optional<double> ndcg_by_definition(const std::vector<double>& scores,
                                                const std::vector<int>& labels, int k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<int> ranked;
  ranked.reserve(labels.size());
  for (std::size_t i : order) ranked.push_back(labels[i]);

  std::vector<int> ideal = labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  const double ideal_dcg = dcg_by_definition(ideal, k);
  if (ideal_dcg == 0.0) return std::nullopt;
  return dcg_by_definition(ranked, k) / ideal_dcg;
}

// ---------------------------------------------------------------------------
// Plackett-Luce probability as the bare product of ratios

inline double naive_pl_probability(const Eigen::VectorXd& scores, const listpl::Permutation& pi) {
  const double shift = scores.maxCoeff();
  double probability = 1.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    double denominator = 0.0;
    for (std::size_t j = i; j < pi.size(); ++j) {
      denominator += std::exp(scores(pi[j]) - shift);
    }
    probability *= std::exp(scores(pi[i]) - shift) / denominator;
  }
  return probability;
}

// ---------------------------------------------------------------------------
// Central finite differences

template <typename F>
Eigen::VectorXd finite_difference_gradient(F&& f, Eigen::VectorXd x, double h = 1e-6) {
  Eigen::VectorXd grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double original = x(i);
    x(i) = original + h;
    const double above = f(x);
    x(i) = original - h;
    const double below = f(x);
    x(i) = original;
    grad(i) = (above - below) / (2.0 * h);
  }
  return grad;
}

// Relative gradient agreement with an absolute floor for near-zero entries.
inline bool gradients_match(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                            double relative_tolerance, double absolute_floor = 1e-8) {
  if (analytic.size() != numeric.size()) return false;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double difference = std::fabs(analytic(i) - numeric(i));
    const double scale = std::max(std::fabs(analytic(i)), std::fabs(numeric(i)));
    if (difference > relative_tolerance * scale && difference > absolute_floor) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Student-t two-tailed tail mass by adaptive Simpson quadrature of the
// density (reference for the incomplete-beta route)

namespace detail {

inline double t_density(double x, double dof) {
  const double log_coefficient = std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) -
                                 0.5 * std::log(dof * M_PI);
  return std::exp(log_coefficient - (dof + 1.0) / 2.0 * std::log1p(x * x / dof));
}

inline double simpson(const std::function<double(double)>& f, double a, double m, double b,
                      double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double eps,
                               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, lm, m, fa, flm, fm);
  const double right = simpson(f, m, rm, b, fm, frm, fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  return adaptive_simpson(f, a, b, fa, fm, fb, simpson(f, a, m, b, fa, fm, fb), eps, 40);
}

}  // namespace detail

inline double t_two_tailed_reference(double t, int dof) {
  const double bound = std::fabs(t);
  if (bound == 0.0) return 1.0;
  const double nu = static_cast<double>(dof);
  const double central =
      detail::integrate([nu](double x) { return detail::t_density(x, nu); }, -bound, bound, 1e-12);
  return std::clamp(1.0 - central, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Distribution distance and permutation indexing for sampler histograms

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double distance = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) distance += std::fabs(p[i] - q[i]);
  return 0.5 * distance;
}

/// Lexicographic rank of a permutation among the n! orderings of 0..n-1.
inline std::size_t permutation_rank(const listpl::Permutation& pi) {
  const std::size_t n = pi.size();
  std::size_t rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller_after = 0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (pi[j] < pi[i]) ++smaller_after;
    }
    std::size_t suffix_count = 1;
    for (std::size_t m = 2; m <= n - 1 - i; ++m) suffix_count *= m;
    rank += smaller_after * suffix_count;
  }
  return rank;
}

inline std::size_t factorial(std::size_t n) {
  std::size_t value = 1;
  for (std::size_t i = 2; i <= n; ++i) value *= i;
  return value;
}

}  // namespace oracles
