// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Projection plus mean-aggregated edge messages for one snapshot, shared by
// the temporal and static detectors.

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "tdg/graph.hpp"
#include "tdg/nn.hpp"
#include "tdg/rng.hpp"

namespace tdg::detail {

template <class Real>
struct SnapshotCache {
  std::size_t n = 0, dh = 0;
  std::vector<Real> x;     // n x feat
  std::vector<Real> h;     // n x dh
  std::vector<Real> mbar;  // n x dh
  std::vector<std::uint32_t> degree;
  std::vector<nn::MlpCache<Real>> edge_cache;
  std::vector<std::vector<Real>> edge_mask;  // empty when dropout is off
};

template <class Real>
void message_forward(const nn::ParamStore<Real>& store, const nn::Linear& w_node,
                     const nn::Mlp& mlp, const GraphSnapshot& snap, double dropout, Rng* rng,
                     SnapshotCache<Real>& c, std::size_t& calls) {
  const std::size_t n = snap.num_nodes, f = snap.feat_dim, dh = w_node.out;
  c.n = n;
  c.dh = dh;
  c.x.assign(snap.node_feats.begin(), snap.node_feats.end());
  c.h.assign(n * dh, Real(0));
  for (std::size_t i = 0; i < n; ++i) {
    nn::linear_forward<Real>(store, w_node, std::span<const Real>(c.x).subspan(i * f, f),
                             std::span<Real>(c.h).subspan(i * dh, dh));
  }
  c.mbar.assign(n * dh, Real(0));
  c.degree.assign(n, 0);
  c.edge_cache.resize(snap.edges.size());
  c.edge_mask.clear();
  const bool drop = rng != nullptr && dropout > 0.0;
  if (drop) c.edge_mask.resize(snap.edges.size());
  std::vector<Real> in(2 * dh + 1);
  for (std::size_t e = 0; e < snap.edges.size(); ++e) {
    const Edge& edge = snap.edges[e];
    std::copy_n(c.h.begin() + edge.src * dh, dh, in.begin());
    std::copy_n(c.h.begin() + edge.dst * dh, dh, in.begin() + dh);
    in[2 * dh] = static_cast<Real>(edge.weight);
    auto out = nn::mlp_forward<Real>(store, mlp, in, c.edge_cache[e]);
    ++calls;
    Real* agg = c.mbar.data() + edge.dst * dh;
    if (drop) {
      auto& mask = c.edge_mask[e];
      mask.resize(dh);
      nn::dropout_mask<Real>(mask, dropout, *rng);
      for (std::size_t d = 0; d < dh; ++d) agg[d] += out[d] * mask[d];
    } else {
      for (std::size_t d = 0; d < dh; ++d) agg[d] += out[d];
    }
    ++c.degree[edge.dst];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (c.degree[i] == 0) continue;
    const Real inv = Real(1) / static_cast<Real>(c.degree[i]);
    for (std::size_t d = 0; d < dh; ++d) c.mbar[i * dh + d] *= inv;
  }
}

// dmbar: n x dh gradient of the aggregated messages. dh_extra: optional n x dh
// gradient reaching the projections directly.
template <class Real>
void message_backward(nn::ParamStore<Real>& store, const nn::Linear& w_node, const nn::Mlp& mlp,
                      const GraphSnapshot& snap, const SnapshotCache<Real>& c,
                      std::span<const Real> dmbar, std::span<const Real> dh_extra) {
  const std::size_t n = c.n, dh = c.dh, f = snap.feat_dim;
  std::vector<Real> dh_all(n * dh, Real(0));
  if (!dh_extra.empty()) std::copy(dh_extra.begin(), dh_extra.end(), dh_all.begin());
  std::vector<Real> dout(dh), din(2 * dh + 1);
  for (std::size_t e = 0; e < snap.edges.size(); ++e) {
    const Edge& edge = snap.edges[e];
    const Real inv = Real(1) / static_cast<Real>(c.degree[edge.dst]);
    for (std::size_t d = 0; d < dh; ++d) {
      dout[d] = dmbar[edge.dst * dh + d] * inv;
      if (!c.edge_mask.empty()) dout[d] *= c.edge_mask[e][d];
    }
    std::fill(din.begin(), din.end(), Real(0));
    nn::mlp_backward<Real>(store, mlp, c.edge_cache[e], dout, din);
    for (std::size_t d = 0; d < dh; ++d) {
      dh_all[edge.src * dh + d] += din[d];
      dh_all[edge.dst * dh + d] += din[dh + d];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    nn::linear_backward<Real>(store, w_node, std::span<const Real>(c.x).subspan(i * f, f),
                              std::span<const Real>(dh_all).subspan(i * dh, dh), {});
  }
}

}  // namespace tdg::detail
