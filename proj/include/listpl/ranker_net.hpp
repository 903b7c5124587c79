#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "listpl/types.hpp"

namespace listpl {

template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weight;  // output_dim x input_dim
  VectorX<Scalar> bias;    // output_dim
};

/// Fully connected scorer. ReLU follows every layer except the last, which
/// is linear with a single output unit, so each document row is scored
/// independently of the others.
template <typename Scalar>
struct ModelParams {
  std::vector<DenseLayer<Scalar>> layers;

  Index feature_count() const {
    return layers.empty() ? 0 : layers.front().weight.cols();
  }
};

/// Gradients share the parameter layout exactly.
template <typename Scalar>
using ParamGrads = ModelParams<Scalar>;

/// Uniform fan-scaled initialization: weights on
/// +-sqrt(6 / (fan_in + fan_out)), biases zero. Deterministic per seed.
template <typename Scalar = double>
ModelParams<Scalar> init_params(Index feature_count, Index hidden_width, Rng& rng,
                                Index hidden_layers = 2) {
  if (feature_count < 1) throw std::invalid_argument("init_params: feature_count must be positive");
  if (hidden_width < 1) throw std::invalid_argument("init_params: hidden_width must be positive");
  if (hidden_layers < 1) throw std::invalid_argument("init_params: need at least one hidden layer");

  std::vector<Index> dims;
  dims.push_back(feature_count);
  for (Index l = 0; l < hidden_layers; ++l) dims.push_back(hidden_width);
  dims.push_back(1);

  ModelParams<Scalar> params;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const Index fan_in = dims[l];
    const Index fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer<Scalar> layer;
    layer.weight.resize(fan_out, fan_in);
    for (Index r = 0; r < fan_out; ++r) {
      for (Index c = 0; c < fan_in; ++c) {
        layer.weight(r, c) = static_cast<Scalar>(uniform_real(rng, -bound, bound));
      }
    }
    layer.bias = VectorX<Scalar>::Zero(fan_out);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

/// Everything backward() needs from one forward pass over a query's
/// document matrix.
template <typename Scalar>
struct ForwardTrace {
  std::vector<MatrixX<Scalar>> activations;      // activations[0] is the input
  std::vector<MatrixX<Scalar>> pre_activations;  // one per layer

  VectorX<Scalar> scores() const { return pre_activations.back().col(0); }
};

/// Scores every document (row of `features`) independently.
template <typename Scalar, typename Derived>
ForwardTrace<Scalar> forward(const ModelParams<Scalar>& params,
                             const Eigen::MatrixBase<Derived>& features) {
  static_assert(std::is_same_v<Scalar, typename Derived::Scalar>, "mixed scalar types");
  if (params.layers.empty()) throw std::invalid_argument("forward: uninitialized model");
  if (features.cols() != params.feature_count()) {
    throw std::invalid_argument("forward: feature dimension mismatch");
  }
  if (!features.allFinite()) throw std::invalid_argument("forward: non-finite features");

  ForwardTrace<Scalar> trace;
  trace.activations.reserve(params.layers.size() + 1);
  trace.pre_activations.reserve(params.layers.size());
  trace.activations.push_back(features.derived());

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer<Scalar>& layer = params.layers[l];
    MatrixX<Scalar> z =
        (trace.activations.back() * layer.weight.transpose()).rowwise() + layer.bias.transpose();
    const bool is_output = (l + 1 == params.layers.size());
    trace.activations.push_back(is_output ? z : z.cwiseMax(Scalar(0)));
    trace.pre_activations.push_back(std::move(z));
  }
  return trace;
}

/// Forward pass returning scores only.
template <typename Scalar, typename Derived>
VectorX<Scalar> score_documents(const ModelParams<Scalar>& params,
                                const Eigen::MatrixBase<Derived>& features) {
  return forward(params, features).scores();
}

/// Exact reverse-mode gradients of sum_j score_grad[j] * scores[j] with
/// respect to every parameter. The ReLU subgradient at 0 is taken as 0.
template <typename Scalar, typename Derived>
ParamGrads<Scalar> backward(const ModelParams<Scalar>& params, const ForwardTrace<Scalar>& trace,
                            const Eigen::MatrixBase<Derived>& score_grad) {
  static_assert(std::is_same_v<Scalar, typename Derived::Scalar>, "mixed scalar types");
  const std::size_t num_layers = params.layers.size();
  if (trace.pre_activations.size() != num_layers || trace.activations.size() != num_layers + 1) {
    throw std::invalid_argument("backward: trace does not match model");
  }
  if (score_grad.size() != trace.activations.front().rows()) {
    throw std::invalid_argument("backward: score_grad length mismatch");
  }

  ParamGrads<Scalar> grads;
  grads.layers.resize(num_layers);

  MatrixX<Scalar> delta = score_grad.derived();
  delta.resize(score_grad.size(), 1);
  for (std::size_t l = num_layers; l-- > 0;) {
    grads.layers[l].weight.noalias() = delta.transpose() * trace.activations[l];
    grads.layers[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      const MatrixX<Scalar> relu_mask =
          (trace.pre_activations[l - 1].array() > Scalar(0)).template cast<Scalar>();
      delta = (delta * params.layers[l].weight).cwiseProduct(relu_mask);
    }
  }
  return grads;
}

/// ADAM moment accumulators, shaped exactly like the parameters they track.
template <typename Scalar>
struct AdamState {
  Index step_count = 0;
  ModelParams<Scalar> first_moment;
  ModelParams<Scalar> second_moment;
  Scalar alpha = Scalar(1e-5);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
};

template <typename Scalar>
AdamState<Scalar> make_adam_state(const ModelParams<Scalar>& params, Scalar alpha = Scalar(1e-5),
                                  Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
                                  Scalar epsilon = Scalar(1e-8)) {
  AdamState<Scalar> state;
  state.alpha = alpha;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  state.first_moment.layers.reserve(params.layers.size());
  state.second_moment.layers.reserve(params.layers.size());
  for (const DenseLayer<Scalar>& layer : params.layers) {
    state.first_moment.layers.push_back(
        {MatrixX<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()),
         VectorX<Scalar>::Zero(layer.bias.size())});
    state.second_moment.layers.push_back(
        {MatrixX<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()),
         VectorX<Scalar>::Zero(layer.bias.size())});
  }
  return state;
}

/// Standard bias-corrected ADAM update, applied in place.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, ModelParams<Scalar>& params,
               const ParamGrads<Scalar>& grads) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.layers.size() != params.layers.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }

  ++state.step_count;
  const Scalar correction1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step_count));
  const Scalar correction2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step_count));

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (g.rows() != param.rows() || g.cols() != param.cols()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = (state.beta2 * v.array() + (Scalar(1) - state.beta2) * g.array().square()).matrix();
    param.array() -= state.alpha * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + state.epsilon);
  };

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, state.first_moment.layers[l].weight,
           state.second_moment.layers[l].weight, grads.layers[l].weight);
    update(params.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias, grads.layers[l].bias);
  }
}

}  // namespace listpl
