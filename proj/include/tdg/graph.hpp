// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Attention graphs. A message edge (j -> i) exists at step t when query token
// i attends to key token j with head-averaged weight above tau.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tdg/trace.hpp"

namespace tdg {

struct Edge {
  std::uint32_t src = 0;  // j, the attended (key) token
  std::uint32_t dst = 0;  // i, the attending (query) token
  float weight = 0.0f;    // A[i][j]

  bool operator==(const Edge&) const = default;
};

struct GraphSnapshot {
  std::uint32_t t = 0;
  std::uint32_t num_nodes = 0;
  std::uint32_t feat_dim = 0;
  std::vector<float> node_feats;  // num_nodes x feat_dim row-major
  std::vector<Edge> edges;        // ascending (dst, src)

  std::span<const float> feats(std::size_t node) const {
    return {node_feats.data() + node * feat_dim, feat_dim};
  }
};

struct TemporalGraphSequence {
  std::uint32_t prompt_len = 0;
  std::uint32_t resp_len = 0;
  std::uint32_t hidden_dim = 0;
  std::vector<std::uint32_t> keyframes;   // descending
  std::vector<GraphSnapshot> snapshots;   // one per keyframe, same order

  std::uint32_t num_nodes() const { return prompt_len + resp_len; }
  // Hidden channels plus the is_prompt flag.
  std::uint32_t feat_dim() const { return hidden_dim + 1; }
  std::size_t total_edges() const;
};

// Elementwise mean of H row-stochastic N x N matrices.
std::vector<float> average_heads(std::span<const std::vector<float>> heads, std::size_t n);

std::vector<Edge> sparsify(std::span<const float> attention, std::size_t n, double tau);

// 2 / (P + R): twice the uniform attention weight.
double default_tau(std::uint32_t prompt_len, std::uint32_t resp_len);

// {T, floor(T/2), floor(T/4), 0}, deduplicated, descending.
std::vector<std::uint32_t> default_keyframes(std::uint32_t total_steps);

TemporalGraphSequence build_sequence(const DenoisingTrace& trace, double tau,
                                     std::span<const std::uint32_t> keyframes);

// Copy with every edge list emptied.
TemporalGraphSequence strip_edges(const TemporalGraphSequence& seq);

// Single-snapshot sequence at keyframe index k.
TemporalGraphSequence select_snapshot(const TemporalGraphSequence& seq, std::size_t k);

}  // namespace tdg
