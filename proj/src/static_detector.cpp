// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "detector_internal.hpp"
#include "tdg/error.hpp"

namespace tdg::detail {

const GraphSnapshot& static_snapshot(const DetectorConfig& cfg, const TemporalGraphSequence& seq) {
  if (seq.snapshots.empty()) fail(ErrorCode::kInvalidArgument, "empty graph sequence");
  if (!cfg.keyframes.empty()) {
    for (const auto& s : seq.snapshots) {
      if (s.t == cfg.keyframes.front()) return s;
    }
    fail(ErrorCode::kMissingKeyframe, "keyframe t=" + std::to_string(cfg.keyframes.front()) +
                                          " is not in the graph sequence");
  }
  if (seq.snapshots.size() != 1) {
    fail(ErrorCode::kDimensionMismatch, "static detector needs exactly one snapshot");
  }
  return seq.snapshots.front();
}

void build_static_layout(const DetectorConfig& cfg, DetectorLayout& layout,
                         nn::ParamStore<float>& params, Rng& rng) {
  layout.update = nn::make_linear(params, "update", 2 * cfg.d_hidden, cfg.d_memory, true, rng);
  layout.f_seq = nn::make_linear(params, "f_seq", cfg.d_memory, 1, true, rng);
}

template <class Real>
ForwardOutput<Real> static_forward(const DetectorConfig& cfg, const DetectorLayout& layout,
                                   const nn::ParamStore<Real>& params,
                                   const TemporalGraphSequence& seq, const ForwardOptions& opt,
                                   StaticCache<Real>* cache) {
  const GraphSnapshot& snap = static_snapshot(cfg, seq);
  if (snap.feat_dim != cfg.feat_dim) {
    fail(ErrorCode::kDimensionMismatch, "node feature dim " + std::to_string(snap.feat_dim) +
                                            " does not match model " +
                                            std::to_string(cfg.feat_dim));
  }
  StaticCache<Real> local;
  StaticCache<Real>& c = cache ? *cache : local;
  const std::size_t n = snap.num_nodes, dh = cfg.d_hidden, dm = cfg.d_memory;
  Rng* rng = (opt.train && cfg.dropout > 0.0) ? opt.dropout_rng : nullptr;
  if (opt.train && cfg.dropout > 0.0 && rng == nullptr) {
    fail(ErrorCode::kInvalidArgument, "training forward needs a dropout rng");
  }

  ForwardOutput<Real> out;
  message_forward<Real>(params, layout.w_node, layout.message, snap, cfg.dropout, rng, c.snap,
                        out.internals.message_calls);
  c.u.assign(n * 2 * dh, Real(0));
  c.z.assign(n * dm, Real(0));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(c.snap.h.begin() + i * dh, dh, c.u.begin() + i * 2 * dh);
    std::copy_n(c.snap.mbar.begin() + i * dh, dh, c.u.begin() + i * 2 * dh + dh);
    std::span<Real> zi(c.z.data() + i * dm, dm);
    nn::linear_forward<Real>(params, layout.update,
                             std::span<const Real>(c.u).subspan(i * 2 * dh, 2 * dh), zi);
    for (auto& v : zi) v = v > Real(0) ? v : Real(0);
  }
  c.resp = response_nodes(snap);
  std::vector<std::uint8_t> mask(n, 0);
  for (auto i : c.resp) mask[i] = 1;
  c.g.assign(dm, Real(0));
  nn::mean_pool<Real>(c.z, dm, mask, c.g);
  c.g_mask.assign(dm, Real(1));
  if (rng != nullptr) nn::dropout_mask<Real>(c.g_mask, cfg.dropout, *rng);
  c.g_used.resize(dm);
  for (std::size_t d = 0; d < dm; ++d) c.g_used[d] = c.g[d] * c.g_mask[d];
  Real logit;
  nn::linear_forward<Real>(params, layout.f_seq, c.g_used, std::span<Real>(&logit, 1));
  out.response_logit = logit;
  out.response_prob = static_cast<Real>(nn::sigmoid(static_cast<double>(logit)));
  out.response_nodes = c.resp;
  return out;
}

template <class Real>
void static_backward(const DetectorConfig& cfg, const DetectorLayout& layout,
                     nn::ParamStore<Real>& params, const TemporalGraphSequence& seq,
                     const StaticCache<Real>& c, Real dlogit) {
  const GraphSnapshot& snap = static_snapshot(cfg, seq);
  const std::size_t n = snap.num_nodes, dh = cfg.d_hidden, dm = cfg.d_memory;
  std::vector<Real> dg(dm, Real(0));
  nn::linear_backward<Real>(params, layout.f_seq, c.g_used, std::span<const Real>(&dlogit, 1), dg);
  const Real inv = Real(1) / static_cast<Real>(c.resp.size());
  for (std::size_t d = 0; d < dm; ++d) dg[d] *= c.g_mask[d] * inv;
  std::vector<Real> dh_extra(n * dh, Real(0)), dmbar(n * dh, Real(0));
  std::vector<Real> dpre(dm), du(2 * dh);
  for (auto i : c.resp) {
    for (std::size_t d = 0; d < dm; ++d) dpre[d] = c.z[i * dm + d] > Real(0) ? dg[d] : Real(0);
    std::fill(du.begin(), du.end(), Real(0));
    nn::linear_backward<Real>(params, layout.update,
                              std::span<const Real>(c.u).subspan(i * 2 * dh, 2 * dh), dpre, du);
    std::copy_n(du.begin(), dh, dh_extra.begin() + i * dh);
    std::copy_n(du.begin() + dh, dh, dmbar.begin() + i * dh);
  }
  message_backward<Real>(params, layout.w_node, layout.message, snap, c.snap, dmbar, dh_extra);
}

template ForwardOutput<float> static_forward<float>(const DetectorConfig&, const DetectorLayout&,
                                                    const nn::ParamStore<float>&,
                                                    const TemporalGraphSequence&,
                                                    const ForwardOptions&, StaticCache<float>*);
template ForwardOutput<double> static_forward<double>(const DetectorConfig&,
                                                      const DetectorLayout&,
                                                      const nn::ParamStore<double>&,
                                                      const TemporalGraphSequence&,
                                                      const ForwardOptions&, StaticCache<double>*);
template void static_backward<float>(const DetectorConfig&, const DetectorLayout&,
                                     nn::ParamStore<float>&, const TemporalGraphSequence&,
                                     const StaticCache<float>&, float);
template void static_backward<double>(const DetectorConfig&, const DetectorLayout&,
                                      nn::ParamStore<double>&, const TemporalGraphSequence&,
                                      const StaticCache<double>&, double);

}  // namespace tdg::detail
