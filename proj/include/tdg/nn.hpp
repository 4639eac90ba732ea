// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small dense layers with hand-derived backward passes. Everything is
// templated on the scalar so the same code runs in float for training and in
// double for finite-difference gradient checks. Backward functions
// accumulate into ParamTensor::grad and into caller-provided input-gradient
// buffers; they never overwrite.

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tdg/rng.hpp"

namespace tdg::nn {

inline constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();
inline constexpr double kBceEps = 1e-7;

template <class Real>
struct ParamTensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Real> value;
  std::vector<Real> grad;

  std::size_t size() const { return value.size(); }
};

template <class Real>
class ParamStore {
 public:
  // Zero-initialised tensor; names must be unique.
  std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);

  ParamTensor<Real>& operator[](std::size_t id) { return params_.at(id); }
  const ParamTensor<Real>& operator[](std::size_t id) const { return params_.at(id); }
  std::size_t find(const std::string& name) const;  // throws when absent

  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  // Adds other's gradients into ours; layouts must match.
  void accumulate_grad(const ParamStore& other);

  template <class Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& p : params_) {
      std::size_t id = out.add(p.name, p.rows, p.cols);
      for (std::size_t k = 0; k < p.size(); ++k) out[id].value[k] = static_cast<Other>(p.value[k]);
    }
    return out;
  }

 private:
  std::vector<ParamTensor<Real>> params_;
};

// Uniform(+-sqrt(6 / (fan_in + fan_out))) on a weight tensor.
template <class Real>
void init_fan_uniform(ParamTensor<Real>& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// y = W x + b, W is out x in. bias may be kNoParam.
struct Linear {
  std::size_t weight = kNoParam;
  std::size_t bias = kNoParam;
  std::size_t in = 0;
  std::size_t out = 0;
};

template <class Real>
Linear make_linear(ParamStore<Real>& store, const std::string& name, std::size_t in,
                   std::size_t out, bool with_bias, Rng& rng);

template <class Real>
void linear_forward(const ParamStore<Real>& store, const Linear& layer,
                    std::span<const Real> x, std::span<Real> y);

// dx may be empty when the input gradient is not needed.
template <class Real>
void linear_backward(ParamStore<Real>& store, const Linear& layer, std::span<const Real> x,
                     std::span<const Real> dy, std::span<Real> dx);

// Affine layers with ReLU between them; the final layer is linear.
struct Mlp {
  std::vector<Linear> layers;
  std::size_t in() const { return layers.front().in; }
  std::size_t out() const { return layers.back().out; }
};

template <class Real>
struct MlpCache {
  std::vector<std::vector<Real>> acts;  // acts[0] = input, acts[l+1] = layer l output
};

// Widths: in -> hidden (x depth-1) -> out.
template <class Real>
Mlp make_mlp(ParamStore<Real>& store, const std::string& name, std::size_t in,
             std::size_t hidden, std::size_t out, std::size_t depth, Rng& rng);

template <class Real>
std::span<const Real> mlp_forward(const ParamStore<Real>& store, const Mlp& mlp,
                                  std::span<const Real> x, MlpCache<Real>& cache);

template <class Real>
void mlp_backward(ParamStore<Real>& store, const Mlp& mlp, const MlpCache<Real>& cache,
                  std::span<const Real> dy, std::span<Real> dx);

// s' = (1 - z) * s + z * n, z = sig(Wz x + Uz s + bz), r = sig(Wr x + Ur s + br),
// n = tanh(Wh x + Uh (r * s) + bh).
struct GruParams {
  Linear wz, wr, wh;  // input -> state, with bias
  Linear uz, ur, uh;  // state -> state, no bias
  std::size_t in() const { return wz.in; }
  std::size_t state() const { return wz.out; }
};

template <class Real>
struct GruCache {
  std::vector<Real> x, s, z, r, rs, n;
};

template <class Real>
GruParams make_gru(ParamStore<Real>& store, const std::string& name, std::size_t in,
                   std::size_t state, Rng& rng);

template <class Real>
void gru_step(const ParamStore<Real>& store, const GruParams& gru, std::span<const Real> x,
              std::span<const Real> s, std::span<Real> s_next, GruCache<Real>* cache);

template <class Real>
void gru_backward(ParamStore<Real>& store, const GruParams& gru, const GruCache<Real>& cache,
                  std::span<const Real> ds_next, std::span<Real> dx, std::span<Real> ds);

// Single-head softmax attention over K steps: weights from q . s_k, output
// sum_k alpha_k latents_k. states is K x d_s, latents is K x d_z.
template <class Real>
void temporal_attention(std::span<const Real> q, std::span<const Real> states,
                        std::span<const Real> latents, std::size_t steps,
                        std::span<Real> alpha, std::span<Real> out);

template <class Real>
void temporal_attention_backward(std::span<const Real> q, std::span<const Real> states,
                                 std::span<const Real> latents, std::size_t steps,
                                 std::span<const Real> alpha, std::span<const Real> dout,
                                 std::span<Real> dq, std::span<Real> dstates,
                                 std::span<Real> dlatents);

// Mean over the rows of a (count x dim) matrix selected by mask.
template <class Real>
void mean_pool(std::span<const Real> rows, std::size_t dim, std::span<const std::uint8_t> mask,
               std::span<Real> out);

// Inverted dropout mask: 0 or 1/(1-p).
template <class Real>
void dropout_mask(std::span<Real> mask, double p, Rng& rng);

double sigmoid(double x);

// -[h ln p + (1-h) ln(1-p)] with p clamped to [eps, 1-eps].
double bce_loss(double p, int h);

// d bce(sigmoid(logit), h) / d logit, consistent with the clamp.
double bce_logit_grad(double logit, int h);

}  // namespace tdg::nn
