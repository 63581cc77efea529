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

// LSTM -> Dropout -> Dense -> linear activation. The model reads a window of
// scaled Note-Matrix rows and regresses the next row.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "notegen/error.hpp"
#include "notegen/lstm.hpp"
#include "notegen/note_matrix.hpp"
#include "notegen/rng.hpp"
#include "notegen/tensor.hpp"

namespace notegen {

enum class Mode { Train, Infer };

// ---------------------------------------------------------------------------
// Dropout (inverted: survivors are scaled by 1/keep at train time)

struct DropoutResult {
  Tensor output;
  Tensor mask;
};

inline DropoutResult dropout_forward(const Tensor& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(Errc::BadRate, "dropout rate " + std::to_string(rate) + " outside [0, 1)");
  if (mode == Mode::Infer || rate == 0.0) return {x, Tensor(x.shape(), 1.0)};
  const double keep = 1.0 - rate;
  Tensor mask = bernoulli_mask(rng, x.shape(), keep);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i] / keep;
  return {std::move(y), std::move(mask)};
}

inline Tensor dropout_backward(const Tensor& grad_y, const Tensor& mask, double rate) {
  detail::require_same_shape(grad_y, mask, "dropout_backward");
  const double keep = 1.0 - rate;
  Tensor g(grad_y.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_y[i] * mask[i] / keep;
  return g;
}

// ---------------------------------------------------------------------------
// Dense

struct DenseParams {
  Tensor weights;  // [hidden, out]
  Tensor bias;     // [out]
  bool operator==(const DenseParams&) const = default;

  static DenseParams init(Rng& rng, std::size_t in, std::size_t out) {
    return {glorot_uniform(rng, in, out, {in, out}), Tensor({out})};
  }
};

struct DenseGrads {
  Tensor weights;
  Tensor bias;
  Tensor input;
};

inline Tensor dense_forward(const DenseParams& p, const Tensor& h) {
  if (h.rank() != 2 || p.weights.rank() != 2 || h.dim(1) != p.weights.dim(0) || p.bias.shape() != Shape{p.weights.dim(1)}) {
    fail(Errc::ShapeMismatch, "dense: input " + shape_string(h.shape()) + ", weights " + shape_string(p.weights.shape()));
  }
  Tensor y = matmul(h, p.weights);
  add_row_vector(y, p.bias);
  return y;
}

inline DenseGrads dense_backward(const DenseParams& p, const Tensor& h, const Tensor& grad_y) {
  if (grad_y.rank() != 2 || grad_y.dim(0) != h.dim(0) || grad_y.dim(1) != p.weights.dim(1)) {
    fail(Errc::ShapeMismatch, "dense_backward: upstream gradient " + shape_string(grad_y.shape()));
  }
  return {matmul_tn(h, grad_y), sum_rows(grad_y), matmul_nt(grad_y, p.weights)};
}

// ---------------------------------------------------------------------------
// Full model

struct ModelConfig {
  std::size_t input_dim = kFeatures;
  std::size_t hidden = 512;
  std::size_t output_dim = kFeatures;
  std::size_t window = 50;
  double dropout_rate = 0.75;
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  LstmParams lstm;
  DenseParams dense;
  bool operator==(const ModelParams&) const = default;

  static ModelParams init(const ModelConfig& cfg, Rng& rng) {
    if (cfg.hidden == 0 || cfg.window == 0 || cfg.input_dim == 0 || cfg.output_dim == 0) {
      fail(Errc::InvalidConfig, "model dimensions must be positive");
    }
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) fail(Errc::BadRate, "dropout rate outside [0, 1)");
    ModelParams p{cfg, LstmParams::init(rng, cfg.input_dim, cfg.hidden), {}};
    p.dense = DenseParams::init(rng, cfg.hidden, cfg.output_dim);
    return p;
  }

  static ModelParams zeros(const ModelConfig& cfg) {
    return {cfg, LstmParams::zeros(cfg.input_dim, cfg.hidden),
            {Tensor({cfg.hidden, cfg.output_dim}), Tensor({cfg.output_dim})}};
  }
};

/// Gradients for every ModelParams tensor, same shapes.
struct ParamGrads {
  LstmParams lstm;
  DenseParams dense;

  static ParamGrads zeros_like(const ModelParams& p) {
    return {LstmParams::zeros(p.config.input_dim, p.config.hidden),
            {Tensor(p.dense.weights.shape()), Tensor(p.dense.bias.shape())}};
  }
};

/// Visits the five trainable tensors in a fixed order with stable names.
/// Works for ModelParams and ParamGrads, const or not.
template <typename P, typename F>
void for_each_tensor(P& params, F&& f) {
  f(std::string_view("lstm/kernel"), params.lstm.kernel);
  f(std::string_view("lstm/recurrent_kernel"), params.lstm.recurrent_kernel);
  f(std::string_view("lstm/bias"), params.lstm.bias);
  f(std::string_view("dense/kernel"), params.dense.weights);
  f(std::string_view("dense/bias"), params.dense.bias);
}

/// Visits a pair of parameter-shaped structs in lockstep.
template <typename A, typename B, typename F>
void for_each_tensor_pair(A& a, B& b, F&& f) {
  f(std::string_view("lstm/kernel"), a.lstm.kernel, b.lstm.kernel);
  f(std::string_view("lstm/recurrent_kernel"), a.lstm.recurrent_kernel, b.lstm.recurrent_kernel);
  f(std::string_view("lstm/bias"), a.lstm.bias, b.lstm.bias);
  f(std::string_view("dense/kernel"), a.dense.weights, b.dense.weights);
  f(std::string_view("dense/bias"), a.dense.bias, b.dense.bias);
}

struct ModelCache {
  LstmCache lstm;
  Tensor h_last;
  Tensor dropped;
  Tensor mask;
  double dropout_rate = 0.0;
};

struct ModelForward {
  Tensor predictions;  // [B, out]
  ModelCache cache;
};

inline ModelForward model_forward(const ModelParams& p, const Tensor& inputs, Mode mode, Rng& rng) {
  if (inputs.rank() != 3 || inputs.dim(1) != p.config.window || inputs.dim(2) != p.config.input_dim) {
    fail(Errc::ShapeMismatch, "model input must be [B, " + std::to_string(p.config.window) + ", " +
                                  std::to_string(p.config.input_dim) + "], got " + shape_string(inputs.shape()));
  }
  auto lstm = lstm_forward(p.lstm, inputs);
  auto drop = dropout_forward(lstm.h_last, p.config.dropout_rate, mode, rng);
  ModelForward out;
  out.predictions = dense_forward(p.dense, drop.output);  // linear activation
  out.cache.lstm = std::move(lstm.cache);
  out.cache.h_last = std::move(lstm.h_last);
  out.cache.dropped = std::move(drop.output);
  out.cache.mask = std::move(drop.mask);
  out.cache.dropout_rate = mode == Mode::Train ? p.config.dropout_rate : 0.0;
  return out;
}

/// Inference convenience: no cache retained by the caller.
inline Tensor predict(const ModelParams& p, const Tensor& inputs) {
  Rng unused(0);
  return model_forward(p, inputs, Mode::Infer, unused).predictions;
}

inline ParamGrads model_backward(const ModelParams& p, const ModelCache& cache, const Tensor& grad_predictions) {
  if (cache.h_last.rank() != 2 || cache.lstm.steps() != p.config.window || cache.h_last.dim(1) != p.config.hidden) {
    fail(Errc::CacheMismatch, "cache was not produced by this model");
  }
  if (grad_predictions.shape() != Shape{cache.h_last.dim(0), p.config.output_dim}) {
    fail(Errc::CacheMismatch, "upstream gradient " + shape_string(grad_predictions.shape()) + " does not match cache");
  }
  auto dense = dense_backward(p.dense, cache.dropped, grad_predictions);
  Tensor grad_h = dropout_backward(dense.input, cache.mask, cache.dropout_rate);
  auto lstm = lstm_backward(p.lstm, cache.lstm, grad_h);
  return {{std::move(lstm.kernel), std::move(lstm.recurrent_kernel), std::move(lstm.bias)},
          {std::move(dense.weights), std::move(dense.bias)}};
}

}  // namespace notegen
