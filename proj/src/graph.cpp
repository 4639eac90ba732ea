// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/graph.hpp"

#include <algorithm>

#include "tdg/error.hpp"

namespace tdg {

std::size_t TemporalGraphSequence::total_edges() const {
  std::size_t total = 0;
  for (const auto& s : snapshots) total += s.edges.size();
  return total;
}

std::vector<float> average_heads(std::span<const std::vector<float>> heads, std::size_t n) {
  if (heads.empty()) fail(ErrorCode::kInvalidArgument, "average_heads: no heads");
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (heads[h].size() != n * n) {
      fail(ErrorCode::kDimensionMismatch,
           "average_heads: head " + std::to_string(h) + " is not " + std::to_string(n) + "x" +
               std::to_string(n));
    }
  }
  std::vector<double> acc(n * n, 0.0);
  for (const auto& head : heads) {
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += head[k];
  }
  std::vector<float> out(n * n);
  const double inv = 1.0 / static_cast<double>(heads.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] * inv);
  return out;
}

std::vector<Edge> sparsify(std::span<const float> attention, std::size_t n, double tau) {
  if (attention.size() != n * n) {
    fail(ErrorCode::kDimensionMismatch, "sparsify: attention is not N x N");
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const float w = attention[i * n + j];
      if (static_cast<double>(w) > tau) {
        edges.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i), w});
      }
    }
  }
  return edges;
}

double default_tau(std::uint32_t prompt_len, std::uint32_t resp_len) {
  return 2.0 / static_cast<double>(prompt_len + resp_len);
}

std::vector<std::uint32_t> default_keyframes(std::uint32_t total_steps) {
  std::vector<std::uint32_t> k = {total_steps, total_steps / 2, total_steps / 4, 0};
  std::sort(k.begin(), k.end(), std::greater<>());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

TemporalGraphSequence build_sequence(const DenoisingTrace& trace, double tau,
                                     std::span<const std::uint32_t> keyframes) {
  if (keyframes.empty()) fail(ErrorCode::kInvalidArgument, "build_sequence: no keyframes");
  if (!(tau >= 0.0 && tau < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "build_sequence: tau must lie in [0, 1)");
  }
  std::vector<std::uint32_t> order(keyframes.begin(), keyframes.end());
  std::sort(order.begin(), order.end(), std::greater<>());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    fail(ErrorCode::kInvalidArgument, "build_sequence: duplicate keyframe");
  }

  TemporalGraphSequence seq;
  seq.prompt_len = trace.prompt_len;
  seq.resp_len = trace.resp_len;
  seq.hidden_dim = trace.hidden_dim;
  seq.keyframes = order;
  const std::uint32_t n = trace.num_nodes();
  const std::uint32_t d = trace.hidden_dim;
  for (std::uint32_t t : order) {
    const StepRecord* step = trace.find_step(t);
    if (step == nullptr) {
      fail(ErrorCode::kMissingKeyframe,
           "keyframe t=" + std::to_string(t) + " is not stored in the trace");
    }
    if (step->attention.size() != std::size_t{n} * n || step->hidden.size() != std::size_t{n} * d) {
      fail(ErrorCode::kDimensionMismatch, "step t=" + std::to_string(t) + " has wrong shape");
    }
    GraphSnapshot snap;
    snap.t = t;
    snap.num_nodes = n;
    snap.feat_dim = d + 1;
    snap.node_feats.resize(std::size_t{n} * (d + 1));
    for (std::uint32_t i = 0; i < n; ++i) {
      float* row = snap.node_feats.data() + std::size_t{i} * (d + 1);
      std::copy_n(step->hidden.data() + std::size_t{i} * d, d, row);
      row[d] = i < trace.prompt_len ? 1.0f : 0.0f;
    }
    snap.edges = sparsify(step->attention, n, tau);
    seq.snapshots.push_back(std::move(snap));
  }
  return seq;
}

TemporalGraphSequence strip_edges(const TemporalGraphSequence& seq) {
  TemporalGraphSequence out = seq;
  for (auto& s : out.snapshots) s.edges.clear();
  return out;
}

TemporalGraphSequence select_snapshot(const TemporalGraphSequence& seq, std::size_t k) {
  if (k >= seq.snapshots.size()) {
    fail(ErrorCode::kInvalidArgument, "select_snapshot: keyframe index out of range");
  }
  TemporalGraphSequence out;
  out.prompt_len = seq.prompt_len;
  out.resp_len = seq.resp_len;
  out.hidden_dim = seq.hidden_dim;
  out.keyframes = {seq.keyframes[k]};
  out.snapshots = {seq.snapshots[k]};
  return out;
}

}  // namespace tdg
