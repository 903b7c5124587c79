#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "listpl/types.hpp"

namespace listpl {

/// A ranking of n documents: order[i] is the 0-based document index placed
/// at rank i. Valid permutations are bijections on {0, ..., n-1}.
using Permutation = std::vector<Index>;

inline bool is_permutation_of(const Permutation& pi, Index n) {
  if (static_cast<Index>(pi.size()) != n) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index doc : pi) {
    if (doc < 0 || doc >= n || seen[static_cast<std::size_t>(doc)]) return false;
    seen[static_cast<std::size_t>(doc)] = true;
  }
  return true;
}

namespace detail {

template <typename Scalar>
void check_finite_scores(const Eigen::Ref<const VectorX<Scalar>>& scores) {
  if (!scores.allFinite()) {
    throw std::invalid_argument("scores must be finite");
  }
}

/// Streaming log-sum-exp with a running max, so suffix normalizers never
/// overflow no matter how the scores are shifted.
template <typename Scalar>
struct LogSumExp {
  Scalar max = -std::numeric_limits<Scalar>::infinity();
  Scalar sum = 0;  // sum of exp(s - max) over everything added so far

  void add(Scalar s) {
    if (s <= max) {
      sum += std::exp(s - max);
    } else {
      sum = sum * std::exp(max - s) + Scalar(1);
      max = s;
    }
  }

  Scalar value() const { return max + std::log(sum); }
};

template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b) {
  if (a == -std::numeric_limits<Scalar>::infinity()) return b;
  if (b == -std::numeric_limits<Scalar>::infinity()) return a;
  const Scalar hi = std::max(a, b);
  const Scalar lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

/// Log-normalizers of every suffix of the ranked list: out[i] is
/// logsumexp over scores of the documents at ranks i..n-1.
template <typename Scalar>
VectorX<Scalar> suffix_log_normalizers(const Eigen::Ref<const VectorX<Scalar>>& scores,
                                       const Permutation& pi) {
  const Index n = scores.size();
  VectorX<Scalar> out(n);
  LogSumExp<Scalar> acc;
  for (Index i = n - 1; i >= 0; --i) {
    acc.add(scores(pi[static_cast<std::size_t>(i)]));
    out(i) = acc.value();
  }
  return out;
}

}  // namespace detail

/// Log-probability of the ranking `pi` under the Plackett-Luce distribution
/// whose item weights are exp(scores): sum over ranks i of
/// s[pi_i] - logsumexp_{j >= i} s[pi_j].
template <typename Derived>
typename Derived::Scalar pl_log_probability(const Eigen::MatrixBase<Derived>& scores,
                                            const Permutation& pi) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const VectorX<Scalar>> s(scores.derived());
  const Index n = s.size();
  if (n < 1) throw std::invalid_argument("pl_log_probability: empty score list");
  if (!is_permutation_of(pi, n)) {
    throw std::invalid_argument("pl_log_probability: pi is not a permutation of the documents");
  }
  detail::check_finite_scores<Scalar>(s);

  const VectorX<Scalar> suffix_lse = detail::suffix_log_normalizers<Scalar>(s, pi);
  Scalar log_p = 0;
  for (Index i = 0; i < n; ++i) {
    log_p += s(pi[static_cast<std::size_t>(i)]) - suffix_lse(i);
  }
  return log_p;
}

/// Maps integer relevance grades to real scores. Any strictly increasing map
/// preserves the label order; this one is the identity up to a positive
/// scale, so a grade y carries PL weight exp(scale * y).
template <typename Scalar = double>
VectorX<Scalar> psi_map(const LabelVector& labels, Scalar scale = Scalar(1)) {
  if (!(scale > Scalar(0))) throw std::invalid_argument("psi_map: scale must be positive");
  return labels.cast<Scalar>() * scale;
}

/// Draws one ranking from the PL distribution over exp(scores) via the
/// Gumbel-max construction: perturb every score with i.i.d. standard Gumbel
/// noise and sort descending. Ties break toward the lower document index.
template <typename Derived>
Permutation sample_permutation(const Eigen::MatrixBase<Derived>& scores, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const VectorX<Scalar>> s(scores.derived());
  const Index n = s.size();
  if (n < 1) throw std::invalid_argument("sample_permutation: empty score list");
  detail::check_finite_scores<Scalar>(s);

  std::vector<std::pair<double, Index>> keyed(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    keyed[static_cast<std::size_t>(i)] = {static_cast<double>(s(i)) + sample_gumbel(rng), i};
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  Permutation pi(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] = keyed[static_cast<std::size_t>(i)].second;
  return pi;
}

/// Same distribution as sample_permutation, drawn literally: select the next
/// item among the remaining ones with probability exp(s_i) / sum of the
/// remaining exp(s_j), remove it, repeat. O(n^2); kept as an independently
/// coded cross-check of the Gumbel-max sampler.
template <typename Derived>
Permutation sample_permutation_sequential(const Eigen::MatrixBase<Derived>& scores, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const VectorX<Scalar>> s(scores.derived());
  const Index n = s.size();
  if (n < 1) throw std::invalid_argument("sample_permutation_sequential: empty score list");
  detail::check_finite_scores<Scalar>(s);

  std::vector<Index> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), Index{0});
  Permutation pi;
  pi.reserve(static_cast<std::size_t>(n));

  while (!remaining.empty()) {
    double top = -std::numeric_limits<double>::infinity();
    for (Index doc : remaining) top = std::max(top, static_cast<double>(s(doc)));
    double total = 0;
    for (Index doc : remaining) total += std::exp(static_cast<double>(s(doc)) - top);

    const double target = uniform_open(rng) * total;
    double cumulative = 0;
    std::size_t chosen = remaining.size() - 1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      cumulative += std::exp(static_cast<double>(s(remaining[i])) - top);
      if (target < cumulative) {
        chosen = i;
        break;
      }
    }
    pi.push_back(remaining[chosen]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  return pi;
}

template <typename Scalar>
struct WeightedPermutation {
  Permutation order;
  Scalar probability;
};

/// Every one of the n! rankings with its exact PL probability, computed
/// straight from the defining product of ratios. Small-n oracle; guarded at
/// n <= 8.
template <typename Derived>
std::vector<WeightedPermutation<typename Derived::Scalar>> enumerate_pl(
    const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  constexpr Index kMaxItems = 8;
  const Eigen::Ref<const VectorX<Scalar>> s(scores.derived());
  const Index n = s.size();
  if (n < 1) throw std::invalid_argument("enumerate_pl: empty score list");
  if (n > kMaxItems) throw std::invalid_argument("enumerate_pl: n! enumeration limited to n <= 8");
  detail::check_finite_scores<Scalar>(s);

  // Shifting by the max leaves every ratio unchanged and keeps exp in range.
  const VectorX<Scalar> weights = (s.array() - s.maxCoeff()).exp();

  Permutation pi(static_cast<std::size_t>(n));
  std::iota(pi.begin(), pi.end(), Index{0});
  std::vector<WeightedPermutation<Scalar>> result;
  do {
    VectorX<Scalar> suffix_sum(n);
    Scalar acc = 0;
    for (Index i = n - 1; i >= 0; --i) {
      acc += weights(pi[static_cast<std::size_t>(i)]);
      suffix_sum(i) = acc;
    }
    Scalar p = 1;
    for (Index i = 0; i < n; ++i) {
      p *= weights(pi[static_cast<std::size_t>(i)]) / suffix_sum(i);
    }
    result.push_back({pi, p});
  } while (std::next_permutation(pi.begin(), pi.end()));
  return result;
}

}  // namespace listpl
