// Copyright 2026 The notegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "notegen/error.hpp"
#include "notegen/model.hpp"
#include "notegen/note_matrix.hpp"
#include "notegen/tensor.hpp"

namespace notegen {

struct LossValue {
  double mse = 0.0;
  Tensor grad;  // d mse / d predictions
};

/// Mean over all B*3 entries of (y - y_hat)^2.
inline LossValue mse(const Tensor& predictions, const Tensor& targets) {
  detail::require_same_shape(predictions, targets, "mse");
  const std::size_t n = predictions.size();
  LossValue out{0.0, Tensor(predictions.shape())};
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = predictions[i] - targets[i];
    sum += diff * diff;
    out.grad[i] = 2.0 * inv_n * diff;
  }
  out.mse = sum * inv_n;
  return out;
}

/// Fraction of entries whose unscaled integer value (pitch, velocity, dt in
/// ticks) equals the target's.
inline double accuracy(const Tensor& predictions, const Tensor& targets, const ScalingParams& scaling) {
  detail::require_same_shape(predictions, targets, "accuracy");
  if (predictions.rank() != 2 || predictions.dim(1) != kFeatures) {
    fail(Errc::ShapeMismatch, "accuracy expects [B, 3], got " + shape_string(predictions.shape()));
  }
  const std::size_t rows = predictions.dim(0);
  if (rows == 0) return 1.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const NoteRow p = unscale(predictions.row(i), scaling);
    const NoteRow t = unscale(targets.row(i), scaling);
    correct += (p.pitch == t.pitch) + (p.velocity == t.velocity) + (p.dt_ticks == t.dt_ticks);
  }
  return static_cast<double>(correct) / static_cast<double>(rows * kFeatures);
}

inline double global_norm(const ParamGrads& g) {
  double sq = 0.0;
  for_each_tensor(g, [&sq](std::string_view, const Tensor& t) {
    for (double v : t.data()) sq += v * v;
  });
  return std::sqrt(sq);
}

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
inline double clip_global_norm(ParamGrads& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for_each_tensor(g, [factor](std::string_view, Tensor& t) {
      for (double& v : t.data()) v *= factor;
    });
  }
  return norm;
}

struct RmspropConfig {
  double lr = 1e-4;
  double rho = 0.9;
  double epsilon = 1e-8;
  bool operator==(const RmspropConfig&) const = default;
};

/// Running average of squared gradients, one tensor per parameter.
struct RmspropState {
  RmspropConfig config;
  ParamGrads mean_square;

  static RmspropState for_params(const ModelParams& p, RmspropConfig cfg = {}) {
    return {cfg, ParamGrads::zeros_like(p)};
  }
};

/// v <- rho*v + (1-rho)*g^2;  p <- p - lr*g/(sqrt(v) + eps).
/// Nothing is modified when any gradient is non-finite.
inline void rmsprop_step(ModelParams& params, const ParamGrads& grads, RmspropState& state) {
  bool finite = true;
  for_each_tensor_pair(params, grads, [&](std::string_view name, const Tensor& p, const Tensor& g) {
    if (p.shape() != g.shape()) fail(Errc::ShapeMismatch, "rmsprop: gradient shape differs for " + std::string(name));
    finite = finite && all_finite(g);
  });
  for_each_tensor_pair(params, state.mean_square, [](std::string_view name, const Tensor& p, const Tensor& v) {
    if (p.shape() != v.shape()) fail(Errc::ShapeMismatch, "rmsprop: state shape differs for " + std::string(name));
  });
  if (!finite) fail(Errc::NonFiniteGradient, "gradient contains NaN or infinity");

  const auto [lr, rho, eps] = state.config;
  ParamGrads& v = state.mean_square;
  auto update = [&](Tensor& p, const Tensor& g, Tensor& ms) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      ms[i] = rho * ms[i] + (1.0 - rho) * g[i] * g[i];
      if (g[i] != 0.0) p[i] -= lr * g[i] / (std::sqrt(ms[i]) + eps);
    }
  };
  update(params.lstm.kernel, grads.lstm.kernel, v.lstm.kernel);
  update(params.lstm.recurrent_kernel, grads.lstm.recurrent_kernel, v.lstm.recurrent_kernel);
  update(params.lstm.bias, grads.lstm.bias, v.lstm.bias);
  update(params.dense.weights, grads.dense.weights, v.dense.weights);
  update(params.dense.bias, grads.dense.bias, v.dense.bias);
}

}  // namespace notegen
