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

// Single LSTM layer without peepholes, unrolled over a window and reduced to
// its final hidden state (many-to-one). Gate blocks inside the 4*hidden
// columns are ordered input, forget, cell candidate, output.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "notegen/error.hpp"
#include "notegen/rng.hpp"
#include "notegen/tensor.hpp"

namespace notegen {

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

struct LstmParams {
  Tensor kernel;            // [input_dim, 4*hidden]
  Tensor recurrent_kernel;  // [hidden, 4*hidden]
  Tensor bias;              // [4*hidden]

  std::size_t input_dim() const { return kernel.dim(0); }
  std::size_t hidden() const { return recurrent_kernel.dim(0); }

  bool operator==(const LstmParams&) const = default;

  static LstmParams zeros(std::size_t input_dim, std::size_t hidden) {
    return {Tensor({input_dim, 4 * hidden}), Tensor({hidden, 4 * hidden}), Tensor({4 * hidden})};
  }

  /// Glorot-uniform kernels, forget-gate bias 1, other biases 0.
  static LstmParams init(Rng& rng, std::size_t input_dim, std::size_t hidden) {
    LstmParams p;
    p.kernel = glorot_uniform(rng, input_dim, 4 * hidden, {input_dim, 4 * hidden});
    p.recurrent_kernel = glorot_uniform(rng, hidden, 4 * hidden, {hidden, 4 * hidden});
    p.bias = Tensor({4 * hidden});
    for (std::size_t j = 0; j < hidden; ++j) p.bias[kForgetGate * hidden + j] = 1.0;
    return p;
  }
};

/// Gradients share the parameter layout; `input` is the gradient of the
/// window, [B, T, input_dim].
struct LstmGrads {
  Tensor kernel;
  Tensor recurrent_kernel;
  Tensor bias;
  Tensor input;
};

struct LstmCache {
  std::vector<Tensor> x;      // T x [B, D]
  std::vector<Tensor> gates;  // T x [B, 4H], post-activation
  std::vector<Tensor> c;      // T+1 x [B, H], c[0] = c0
  std::vector<Tensor> h;      // T+1 x [B, H], h[0] = h0
  std::vector<Tensor> tanh_c; // T x [B, H]

  std::size_t steps() const { return x.size(); }
};

struct LstmForward {
  Tensor h_last;  // [B, H]
  LstmCache cache;
};

/// input[:, t, :] as a [B, D] matrix.
inline Tensor time_slice(const Tensor& input, std::size_t t) {
  const std::size_t b = input.dim(0), d = input.dim(2);
  Tensor out({b, d});
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t k = 0; k < d; ++k) out(i, k) = input(i, t, k);
  return out;
}

inline LstmForward lstm_forward(const LstmParams& p, const Tensor& input, const Tensor& h0, const Tensor& c0) {
  const std::size_t hidden = p.hidden();
  if (p.kernel.shape() != Shape{p.input_dim(), 4 * hidden} || p.bias.shape() != Shape{4 * hidden} ||
      p.recurrent_kernel.dim(1) != 4 * hidden) {
    fail(Errc::ShapeMismatch, "inconsistent LSTM parameter shapes");
  }
  if (input.rank() != 3 || input.dim(2) != p.input_dim() || input.dim(1) == 0) {
    fail(Errc::ShapeMismatch, "LSTM input must be [B, T>=1, " + std::to_string(p.input_dim()) + "], got " +
                                  shape_string(input.shape()));
  }
  const std::size_t batch = input.dim(0), steps = input.dim(1);
  if (h0.shape() != Shape{batch, hidden} || c0.shape() != Shape{batch, hidden}) {
    fail(Errc::ShapeMismatch, "initial state must be [B, hidden]");
  }

  LstmForward out;
  LstmCache& cache = out.cache;
  cache.x.reserve(steps);
  cache.gates.reserve(steps);
  cache.tanh_c.reserve(steps);
  cache.c.reserve(steps + 1);
  cache.h.reserve(steps + 1);
  cache.c.push_back(c0);
  cache.h.push_back(h0);

  for (std::size_t t = 0; t < steps; ++t) {
    cache.x.push_back(time_slice(input, t));
    Tensor z = matmul(cache.x.back(), p.kernel);
    accumulate(z, matmul(cache.h.back(), p.recurrent_kernel));
    add_row_vector(z, p.bias);

    Tensor c({batch, hidden});
    Tensor h({batch, hidden});
    Tensor tc({batch, hidden});
    const Tensor& c_prev = cache.c.back();
    for (std::size_t b = 0; b < batch; ++b) {
      auto zr = z.row(b);
      for (std::size_t j = 0; j < hidden; ++j) {
        double& i = zr[kInputGate * hidden + j];
        double& f = zr[kForgetGate * hidden + j];
        double& g = zr[kCellGate * hidden + j];
        double& o = zr[kOutputGate * hidden + j];
        i = sigmoid(i);
        f = sigmoid(f);
        g = std::tanh(g);
        o = sigmoid(o);
        c(b, j) = f * c_prev(b, j) + i * g;
        tc(b, j) = std::tanh(c(b, j));
        h(b, j) = o * tc(b, j);
      }
    }
    cache.gates.push_back(std::move(z));
    cache.c.push_back(std::move(c));
    cache.tanh_c.push_back(std::move(tc));
    cache.h.push_back(std::move(h));
  }
  out.h_last = cache.h.back();
  return out;
}

inline LstmForward lstm_forward(const LstmParams& p, const Tensor& input) {
  const Tensor zeros({input.rank() == 3 ? input.dim(0) : 0, p.hidden()});
  return lstm_forward(p, input, zeros, zeros);
}

/// Backpropagation through time over the whole cached window, given the
/// gradient of the loss with respect to the final hidden state.
inline LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache, const Tensor& grad_h_last) {
  const std::size_t hidden = p.hidden();
  const std::size_t steps = cache.steps();
  if (steps == 0 || cache.h.size() != steps + 1 || cache.c.size() != steps + 1 || cache.gates.size() != steps) {
    fail(Errc::CacheMismatch, "LSTM cache is incomplete");
  }
  const std::size_t batch = cache.h.back().dim(0);
  if (cache.h.back().dim(1) != hidden || cache.x.front().dim(1) != p.input_dim()) {
    fail(Errc::CacheMismatch, "LSTM cache does not match parameter shapes");
  }
  if (grad_h_last.shape() != Shape{batch, hidden}) {
    fail(Errc::CacheMismatch, "upstream gradient " + shape_string(grad_h_last.shape()) + " does not match cache");
  }

  LstmGrads g{Tensor(p.kernel.shape()), Tensor(p.recurrent_kernel.shape()), Tensor(p.bias.shape()),
              Tensor({batch, steps, p.input_dim()})};
  Tensor dh = grad_h_last;
  Tensor dc({batch, hidden});
  Tensor dz({batch, 4 * hidden});
  const Tensor kernel_t = transpose(p.kernel);
  const Tensor recurrent_t = transpose(p.recurrent_kernel);

  for (std::size_t t = steps; t-- > 0;) {
    const Tensor& gates = cache.gates[t];
    const Tensor& c_prev = cache.c[t];
    const Tensor& tc = cache.tanh_c[t];
    for (std::size_t b = 0; b < batch; ++b) {
      auto gr = gates.row(b);
      auto dzr = dz.row(b);
      for (std::size_t j = 0; j < hidden; ++j) {
        const double i = gr[kInputGate * hidden + j];
        const double f = gr[kForgetGate * hidden + j];
        const double cand = gr[kCellGate * hidden + j];
        const double o = gr[kOutputGate * hidden + j];
        const double th = tc(b, j);
        const double dhv = dh(b, j);
        const double dcv = dc(b, j) + dhv * o * (1.0 - th * th);
        dzr[kInputGate * hidden + j] = dcv * cand * i * (1.0 - i);
        dzr[kForgetGate * hidden + j] = dcv * c_prev(b, j) * f * (1.0 - f);
        dzr[kCellGate * hidden + j] = dcv * i * (1.0 - cand * cand);
        dzr[kOutputGate * hidden + j] = dhv * th * o * (1.0 - o);
        dc(b, j) = dcv * f;
      }
    }
    matmul_tn_add(cache.x[t], dz, g.kernel);
    matmul_tn_add(cache.h[t], dz, g.recurrent_kernel);
    accumulate(g.bias, sum_rows(dz));
    const Tensor dx = matmul(dz, kernel_t);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < p.input_dim(); ++k) g.input(b, t, k) = dx(b, k);
    dh = matmul(dz, recurrent_t);
  }
  return g;
}

}  // namespace notegen
