// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "message_passing.hpp"
#include "tdg/detector.hpp"

namespace tdg::detail {

std::vector<std::uint32_t> response_nodes(const GraphSnapshot& snap);

template <class Real>
struct StaticCache {
  SnapshotCache<Real> snap;
  std::vector<Real> u;  // n x 2dh, [h_i, m_i]
  std::vector<Real> z;  // n x dm, after ReLU
  std::vector<Real> g, g_mask, g_used;
  std::vector<std::uint32_t> resp;
};

const GraphSnapshot& static_snapshot(const DetectorConfig& cfg, const TemporalGraphSequence& seq);

template <class Real>
ForwardOutput<Real> static_forward(const DetectorConfig& cfg, const DetectorLayout& layout,
                                   const nn::ParamStore<Real>& params,
                                   const TemporalGraphSequence& seq, const ForwardOptions& opt,
                                   StaticCache<Real>* cache);

template <class Real>
void static_backward(const DetectorConfig& cfg, const DetectorLayout& layout,
                     nn::ParamStore<Real>& params, const TemporalGraphSequence& seq,
                     const StaticCache<Real>& cache, Real dlogit);

void build_static_layout(const DetectorConfig& cfg, DetectorLayout& layout,
                         nn::ParamStore<float>& params, Rng& rng);

}  // namespace tdg::detail
