#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "listpl/plackett_luce.hpp"
#include "listpl/types.hpp"

namespace listpl {

/// Loss value together with its gradient with respect to the per-document
/// scores. ListPL additionally records the ranking it drew.
template <typename Scalar>
struct LossResult {
  Scalar loss = Scalar(0);
  VectorX<Scalar> grad;
  std::optional<Permutation> sampled_pi;
};

namespace detail {

template <typename Scalar>
VectorX<Scalar> softmax(const Eigen::Ref<const VectorX<Scalar>>& v) {
  VectorX<Scalar> e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Scalar>
void check_equal_lengths(Index a, Index b, const char* where) {
  if (a != b) throw std::invalid_argument(std::string(where) + ": length mismatch");
  if (a < 1) throw std::invalid_argument(std::string(where) + ": empty list");
}

}  // namespace detail

/// ListNet at top-1: cross entropy between the two softmax distributions,
/// q = softmax(label_scores) and p = softmax(predicted). Gradient is p - q.
template <typename D1, typename D2>
LossResult<typename D1::Scalar> listnet_top1(const Eigen::MatrixBase<D1>& predicted,
                                             const Eigen::MatrixBase<D2>& label_scores) {
  using Scalar = typename D1::Scalar;
  static_assert(std::is_same_v<Scalar, typename D2::Scalar>, "mixed scalar types");
  const Eigen::Ref<const VectorX<Scalar>> pred(predicted.derived());
  const Eigen::Ref<const VectorX<Scalar>> truth(label_scores.derived());
  detail::check_equal_lengths<Scalar>(pred.size(), truth.size(), "listnet_top1");
  detail::check_finite_scores<Scalar>(pred);
  detail::check_finite_scores<Scalar>(truth);

  const VectorX<Scalar> q = detail::softmax<Scalar>(truth);
  const VectorX<Scalar> p = detail::softmax<Scalar>(pred);
  // log p computed directly from the scores, not from p, for accuracy.
  detail::LogSumExp<Scalar> lse;
  for (Index i = 0; i < pred.size(); ++i) lse.add(pred(i));
  const VectorX<Scalar> log_p = pred.array() - lse.value();

  LossResult<Scalar> result;
  result.loss = -q.dot(log_p);
  result.grad = p - q;
  return result;
}

/// The fixed ranking ListMLE treats as ground truth: documents sorted by
/// descending relevance label, ties broken by original document index.
inline Permutation label_sort_permutation(const LabelVector& labels) {
  Permutation pi(static_cast<std::size_t>(labels.size()));
  std::iota(pi.begin(), pi.end(), Index{0});
  std::stable_sort(pi.begin(), pi.end(),
                   [&](Index a, Index b) { return labels(a) > labels(b); });
  return pi;
}

/// ListMLE: negative PL log-likelihood of the ranking `pi` under the
/// predicted scores. The gradient at the document ranked k-th is
///   sum_{i=1..k} exp(s_{pi_k}) / sum_{j=i..n} exp(s_{pi_j})  -  1,
/// evaluated in O(n) through suffix log-normalizers and a running
/// log-prefix-sum of their reciprocals. Every exponent is <= 0, so the
/// computation cannot overflow.
template <typename Derived>
LossResult<typename Derived::Scalar> listmle(const Eigen::MatrixBase<Derived>& predicted,
                                             const Permutation& pi) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const VectorX<Scalar>> s(predicted.derived());
  const Index n = s.size();
  if (n < 1) throw std::invalid_argument("listmle: empty score list");
  if (!is_permutation_of(pi, n)) {
    throw std::invalid_argument("listmle: pi is not a permutation of the documents");
  }
  detail::check_finite_scores<Scalar>(s);

  const VectorX<Scalar> suffix_lse = detail::suffix_log_normalizers<Scalar>(s, pi);

  LossResult<Scalar> result;
  result.grad = VectorX<Scalar>(n);
  Scalar log_prefix = -std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < n; ++k) {
    const Index doc = pi[static_cast<std::size_t>(k)];
    result.loss -= s(doc) - suffix_lse(k);
    log_prefix = detail::log_add_exp<Scalar>(log_prefix, -suffix_lse(k));
    result.grad(doc) = std::expm1(s(doc) + log_prefix);
  }
  return result;
}

/// ListPL: draw one ranking from the PL distribution of the mapped labels,
/// then score it with ListMLE. One sample per invocation; the expectation
/// over draws is the full listwise cross entropy.
template <typename Derived>
LossResult<typename Derived::Scalar> listpl_loss(const Eigen::MatrixBase<Derived>& predicted,
                                                 const LabelVector& labels, Rng& rng,
                                                 typename Derived::Scalar psi_scale = 1) {
  using Scalar = typename Derived::Scalar;
  detail::check_equal_lengths<Scalar>(predicted.size(), labels.size(), "listpl_loss");
  if ((labels.array() < 0).any()) {
    throw std::invalid_argument("listpl_loss: negative relevance label");
  }
  Permutation pi = sample_permutation(psi_map<Scalar>(labels, psi_scale), rng);
  LossResult<Scalar> result = listmle(predicted, pi);
  result.sampled_pi = std::move(pi);
  return result;
}

/// Exact listwise cross entropy between the label-induced and score-induced
/// PL distributions: -sum over all n! rankings of
/// P(pi; label_scores) * log P(pi; predicted). This is the O(n!) objective
/// that ListPL estimates with one sample; usable only at oracle scale.
template <typename D1, typename D2>
typename D1::Scalar full_cross_entropy(const Eigen::MatrixBase<D1>& predicted,
                                       const Eigen::MatrixBase<D2>& label_scores) {
  using Scalar = typename D1::Scalar;
  static_assert(std::is_same_v<Scalar, typename D2::Scalar>, "mixed scalar types");
  detail::check_equal_lengths<Scalar>(predicted.size(), label_scores.size(),
                                      "full_cross_entropy");
  Scalar value = 0;
  for (const auto& [pi, probability] : enumerate_pl(label_scores)) {
    value -= probability * pl_log_probability(predicted, pi);
  }
  return value;
}

}  // namespace listpl
