// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/nn.hpp"

#include <algorithm>
#include <cmath>

#include "tdg/error.hpp"

namespace tdg::nn {

namespace {

template <class Real>
Real sig(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    fail(ErrorCode::kDimensionMismatch, std::string(what) + ": expected dimension " +
                                            std::to_string(want) + ", got " +
                                            std::to_string(got));
  }
}

}  // namespace

template <class Real>
std::size_t ParamStore<Real>::add(const std::string& name, std::size_t rows, std::size_t cols) {
  for (const auto& p : params_) {
    if (p.name == name) fail(ErrorCode::kInvalidArgument, "duplicate parameter name " + name);
  }
  ParamTensor<Real> p;
  p.name = name;
  p.rows = rows;
  p.cols = cols;
  p.value.assign(rows * cols, Real(0));
  p.grad.assign(rows * cols, Real(0));
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <class Real>
std::size_t ParamStore<Real>::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  fail(ErrorCode::kInvalidArgument, "no parameter named " + name);
}

template <class Real>
std::size_t ParamStore<Real>::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <class Real>
void ParamStore<Real>::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), Real(0));
}

template <class Real>
void ParamStore<Real>::accumulate_grad(const ParamStore& other) {
  check_dim(other.params_.size(), params_.size(), "accumulate_grad");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& g = params_[i].grad;
    const auto& o = other.params_[i].grad;
    check_dim(o.size(), g.size(), "accumulate_grad");
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += o[k];
  }
}

template <class Real>
void init_fan_uniform(ParamTensor<Real>& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : p.value) v = static_cast<Real>(rng.uniform(-limit, limit));
}

template <class Real>
Linear make_linear(ParamStore<Real>& store, const std::string& name, std::size_t in,
                   std::size_t out, bool with_bias, Rng& rng) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = store.add(name + ".weight", out, in);
  init_fan_uniform(store[l.weight], in, out, rng);
  if (with_bias) l.bias = store.add(name + ".bias", out, 1);
  return l;
}

template <class Real>
void linear_forward(const ParamStore<Real>& store, const Linear& layer, std::span<const Real> x,
                    std::span<Real> y) {
  check_dim(x.size(), layer.in, "linear input");
  check_dim(y.size(), layer.out, "linear output");
  const Real* w = store[layer.weight].value.data();
  for (std::size_t o = 0; o < layer.out; ++o) {
    Real acc = layer.bias == kNoParam ? Real(0) : store[layer.bias].value[o];
    const Real* row = w + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

template <class Real>
void linear_backward(ParamStore<Real>& store, const Linear& layer, std::span<const Real> x,
                     std::span<const Real> dy, std::span<Real> dx) {
  check_dim(x.size(), layer.in, "linear backward input");
  check_dim(dy.size(), layer.out, "linear backward output grad");
  auto& wp = store[layer.weight];
  Real* gw = wp.grad.data();
  const Real* w = wp.value.data();
  if (layer.bias != kNoParam) {
    auto& gb = store[layer.bias].grad;
    for (std::size_t o = 0; o < layer.out; ++o) gb[o] += dy[o];
  }
  const bool want_dx = !dx.empty();
  if (want_dx) check_dim(dx.size(), layer.in, "linear backward input grad");
  for (std::size_t o = 0; o < layer.out; ++o) {
    const Real g = dy[o];
    if (g == Real(0)) continue;
    Real* grow = gw + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) grow[i] += g * x[i];
    if (want_dx) {
      const Real* row = w + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) dx[i] += g * row[i];
    }
  }
}

template <class Real>
Mlp make_mlp(ParamStore<Real>& store, const std::string& name, std::size_t in,
             std::size_t hidden, std::size_t out, std::size_t depth, Rng& rng) {
  if (depth < 1) fail(ErrorCode::kInvalidArgument, "mlp depth must be >= 1");
  Mlp m;
  std::size_t width = in;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t next = (l + 1 == depth) ? out : hidden;
    m.layers.push_back(make_linear(store, name + "." + std::to_string(l), width, next, true, rng));
    width = next;
  }
  return m;
}

template <class Real>
std::span<const Real> mlp_forward(const ParamStore<Real>& store, const Mlp& mlp,
                                  std::span<const Real> x, MlpCache<Real>& cache) {
  check_dim(x.size(), mlp.in(), "mlp input");
  cache.acts.resize(mlp.layers.size() + 1);
  cache.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    auto& y = cache.acts[l + 1];
    y.resize(mlp.layers[l].out);
    linear_forward<Real>(store, mlp.layers[l], cache.acts[l], y);
    if (l + 1 < mlp.layers.size()) {
      for (auto& v : y) v = v > Real(0) ? v : Real(0);
    }
  }
  return cache.acts.back();
}

template <class Real>
void mlp_backward(ParamStore<Real>& store, const Mlp& mlp, const MlpCache<Real>& cache,
                  std::span<const Real> dy, std::span<Real> dx) {
  if (cache.acts.size() != mlp.layers.size() + 1) {
    fail(ErrorCode::kState, "mlp backward before forward");
  }
  std::vector<Real> grad(dy.begin(), dy.end());
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    if (l + 1 < mlp.layers.size()) {
      const auto& post = cache.acts[l + 1];
      for (std::size_t k = 0; k < grad.size(); ++k) {
        if (!(post[k] > Real(0))) grad[k] = Real(0);
      }
    }
    if (l == 0) {
      linear_backward<Real>(store, mlp.layers[0], cache.acts[0], grad, dx);
    } else {
      std::vector<Real> below(mlp.layers[l].in, Real(0));
      linear_backward<Real>(store, mlp.layers[l], cache.acts[l], grad, below);
      grad.swap(below);
    }
  }
}

template <class Real>
GruParams make_gru(ParamStore<Real>& store, const std::string& name, std::size_t in,
                   std::size_t state, Rng& rng) {
  if (in == 0 || state == 0) fail(ErrorCode::kInvalidArgument, "gru dims must be positive");
  GruParams g;
  g.wz = make_linear(store, name + ".wz", in, state, true, rng);
  g.wr = make_linear(store, name + ".wr", in, state, true, rng);
  g.wh = make_linear(store, name + ".wh", in, state, true, rng);
  g.uz = make_linear(store, name + ".uz", state, state, false, rng);
  g.ur = make_linear(store, name + ".ur", state, state, false, rng);
  g.uh = make_linear(store, name + ".uh", state, state, false, rng);
  return g;
}

template <class Real>
void gru_step(const ParamStore<Real>& store, const GruParams& gru, std::span<const Real> x,
              std::span<const Real> s, std::span<Real> s_next, GruCache<Real>* cache) {
  const std::size_t m = gru.state();
  check_dim(x.size(), gru.in(), "gru input");
  check_dim(s.size(), m, "gru state");
  check_dim(s_next.size(), m, "gru next state");
  std::vector<Real> z(m), r(m), n(m), tmp(m), rs(m);
  linear_forward<Real>(store, gru.wz, x, z);
  linear_forward<Real>(store, gru.uz, s, tmp);
  for (std::size_t k = 0; k < m; ++k) z[k] = sig(z[k] + tmp[k]);
  linear_forward<Real>(store, gru.wr, x, r);
  linear_forward<Real>(store, gru.ur, s, tmp);
  for (std::size_t k = 0; k < m; ++k) {
    r[k] = sig(r[k] + tmp[k]);
    rs[k] = r[k] * s[k];
  }
  linear_forward<Real>(store, gru.wh, x, n);
  linear_forward<Real>(store, gru.uh, rs, tmp);
  for (std::size_t k = 0; k < m; ++k) n[k] = std::tanh(n[k] + tmp[k]);
  for (std::size_t k = 0; k < m; ++k) s_next[k] = (Real(1) - z[k]) * s[k] + z[k] * n[k];
  if (cache != nullptr) {
    cache->x.assign(x.begin(), x.end());
    cache->s.assign(s.begin(), s.end());
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->rs = std::move(rs);
    cache->n = std::move(n);
  }
}

template <class Real>
void gru_backward(ParamStore<Real>& store, const GruParams& gru, const GruCache<Real>& c,
                  std::span<const Real> ds_next, std::span<Real> dx, std::span<Real> ds) {
  const std::size_t m = gru.state();
  if (c.z.size() != m) fail(ErrorCode::kState, "gru backward before forward");
  check_dim(ds_next.size(), m, "gru backward state grad");
  check_dim(ds.size(), m, "gru backward prior-state grad");
  std::vector<Real> dah(m), daz(m), dar(m), drs(m, Real(0));
  for (std::size_t k = 0; k < m; ++k) {
    const Real g = ds_next[k];
    ds[k] += g * (Real(1) - c.z[k]);
    const Real dn = g * c.z[k];
    dah[k] = dn * (Real(1) - c.n[k] * c.n[k]);
    const Real dz = g * (c.n[k] - c.s[k]);
    daz[k] = dz * c.z[k] * (Real(1) - c.z[k]);
  }
  linear_backward<Real>(store, gru.wh, c.x, dah, dx);
  linear_backward<Real>(store, gru.uh, c.rs, dah, drs);
  for (std::size_t k = 0; k < m; ++k) {
    ds[k] += drs[k] * c.r[k];
    const Real dr = drs[k] * c.s[k];
    dar[k] = dr * c.r[k] * (Real(1) - c.r[k]);
  }
  linear_backward<Real>(store, gru.wr, c.x, dar, dx);
  linear_backward<Real>(store, gru.ur, c.s, dar, ds);
  linear_backward<Real>(store, gru.wz, c.x, daz, dx);
  linear_backward<Real>(store, gru.uz, c.s, daz, ds);
}

template <class Real>
void temporal_attention(std::span<const Real> q, std::span<const Real> states,
                        std::span<const Real> latents, std::size_t steps, std::span<Real> alpha,
                        std::span<Real> out) {
  if (steps == 0) fail(ErrorCode::kInvalidArgument, "temporal attention over zero steps");
  const std::size_t ds = q.size();
  const std::size_t dz = out.size();
  check_dim(states.size(), steps * ds, "temporal attention states");
  check_dim(latents.size(), steps * dz, "temporal attention latents");
  check_dim(alpha.size(), steps, "temporal attention weights");
  Real max_logit = -std::numeric_limits<Real>::infinity();
  for (std::size_t k = 0; k < steps; ++k) {
    Real logit = 0;
    for (std::size_t d = 0; d < ds; ++d) logit += q[d] * states[k * ds + d];
    alpha[k] = logit;
    max_logit = std::max(max_logit, logit);
  }
  Real total = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    alpha[k] = std::exp(alpha[k] - max_logit);
    total += alpha[k];
  }
  for (std::size_t k = 0; k < steps; ++k) alpha[k] /= total;
  std::fill(out.begin(), out.end(), Real(0));
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t d = 0; d < dz; ++d) out[d] += alpha[k] * latents[k * dz + d];
  }
}

template <class Real>
void temporal_attention_backward(std::span<const Real> q, std::span<const Real> states,
                                 std::span<const Real> latents, std::size_t steps,
                                 std::span<const Real> alpha, std::span<const Real> dout,
                                 std::span<Real> dq, std::span<Real> dstates,
                                 std::span<Real> dlatents) {
  const std::size_t ds = q.size();
  const std::size_t dz = dout.size();
  std::vector<Real> dalpha(steps);
  Real weighted = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    Real g = 0;
    for (std::size_t d = 0; d < dz; ++d) {
      g += dout[d] * latents[k * dz + d];
      dlatents[k * dz + d] += alpha[k] * dout[d];
    }
    dalpha[k] = g;
    weighted += alpha[k] * g;
  }
  for (std::size_t k = 0; k < steps; ++k) {
    const Real dlogit = alpha[k] * (dalpha[k] - weighted);
    for (std::size_t d = 0; d < ds; ++d) {
      dq[d] += dlogit * states[k * ds + d];
      dstates[k * ds + d] += dlogit * q[d];
    }
  }
}

template <class Real>
void mean_pool(std::span<const Real> rows, std::size_t dim, std::span<const std::uint8_t> mask,
               std::span<Real> out) {
  check_dim(rows.size(), mask.size() * dim, "mean_pool rows");
  check_dim(out.size(), dim, "mean_pool output");
  std::fill(out.begin(), out.end(), Real(0));
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++count;
    for (std::size_t d = 0; d < dim; ++d) out[d] += rows[i * dim + d];
  }
  if (count == 0) fail(ErrorCode::kInvalidArgument, "mean_pool over an empty subset");
  for (auto& v : out) v /= static_cast<Real>(count);
}

template <class Real>
void dropout_mask(std::span<Real> mask, double p, Rng& rng) {
  if (p <= 0.0) {
    std::fill(mask.begin(), mask.end(), Real(1));
    return;
  }
  const Real keep = static_cast<Real>(1.0 / (1.0 - p));
  for (auto& m : mask) m = rng.uniform() < p ? Real(0) : keep;
}

double sigmoid(double x) { return sig(x); }

double bce_loss(double p, int h) {
  const double q = std::clamp(p, kBceEps, 1.0 - kBceEps);
  return h ? -std::log(q) : -std::log(1.0 - q);
}

double bce_logit_grad(double logit, int h) {
  const double p = sig(logit);
  if (p < kBceEps || p > 1.0 - kBceEps) return 0.0;
  return p - (h ? 1.0 : 0.0);
}

#define TDG_NN_INSTANTIATE(R)                                                                   \
  template class ParamStore<R>;                                                                 \
  template void init_fan_uniform<R>(ParamTensor<R>&, std::size_t, std::size_t, Rng&);           \
  template Linear make_linear<R>(ParamStore<R>&, const std::string&, std::size_t, std::size_t,  \
                                 bool, Rng&);                                                   \
  template void linear_forward<R>(const ParamStore<R>&, const Linear&, std::span<const R>,      \
                                  std::span<R>);                                                \
  template void linear_backward<R>(ParamStore<R>&, const Linear&, std::span<const R>,           \
                                   std::span<const R>, std::span<R>);                           \
  template Mlp make_mlp<R>(ParamStore<R>&, const std::string&, std::size_t, std::size_t,        \
                           std::size_t, std::size_t, Rng&);                                     \
  template std::span<const R> mlp_forward<R>(const ParamStore<R>&, const Mlp&,                  \
                                             std::span<const R>, MlpCache<R>&);                 \
  template void mlp_backward<R>(ParamStore<R>&, const Mlp&, const MlpCache<R>&,                 \
                                std::span<const R>, std::span<R>);                              \
  template GruParams make_gru<R>(ParamStore<R>&, const std::string&, std::size_t, std::size_t,  \
                                 Rng&);                                                         \
  template void gru_step<R>(const ParamStore<R>&, const GruParams&, std::span<const R>,         \
                            std::span<const R>, std::span<R>, GruCache<R>*);                    \
  template void gru_backward<R>(ParamStore<R>&, const GruParams&, const GruCache<R>&,           \
                                std::span<const R>, std::span<R>, std::span<R>);                \
  template void temporal_attention<R>(std::span<const R>, std::span<const R>,                   \
                                      std::span<const R>, std::size_t, std::span<R>,            \
                                      std::span<R>);                                            \
  template void temporal_attention_backward<R>(                                                 \
      std::span<const R>, std::span<const R>, std::span<const R>, std::size_t,                  \
      std::span<const R>, std::span<const R>, std::span<R>, std::span<R>, std::span<R>);        \
  template void mean_pool<R>(std::span<const R>, std::size_t, std::span<const std::uint8_t>,    \
                             std::span<R>);                                                     \
  template void dropout_mask<R>(std::span<R>, double, Rng&);

TDG_NN_INSTANTIATE(float)
TDG_NN_INSTANTIATE(double)

#undef TDG_NN_INSTANTIATE

}  // namespace tdg::nn
