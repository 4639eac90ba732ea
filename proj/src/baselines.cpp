// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/baselines.hpp"

#include "tdg/error.hpp"
#include "tdg/metrics.hpp"

namespace tdg {

namespace {

const StepRecord& step_at(const DenoisingTrace& trace, std::uint32_t t) {
  const StepRecord* step = trace.find_step(t);
  if (step == nullptr) {
    fail(ErrorCode::kMissingKeyframe, "keyframe t=" + std::to_string(t) + " is not stored in the trace");
  }
  return *step;
}

}  // namespace

std::vector<std::uint32_t> token_degree(const GraphSnapshot& snap) {
  std::vector<std::uint32_t> deg(snap.num_nodes, 0);
  for (const auto& e : snap.edges) ++deg.at(e.dst);
  return deg;
}

std::vector<double> degree_scores(const GraphSnapshot& snap, std::uint32_t prompt_len) {
  if (prompt_len >= snap.num_nodes) {
    fail(ErrorCode::kInvalidArgument, "degree_scores: no response nodes");
  }
  const auto deg = token_degree(snap);
  std::vector<double> neg;
  for (std::uint32_t i = prompt_len; i < snap.num_nodes; ++i) neg.push_back(-double(deg[i]));
  return rank_normalize(neg);
}

double source_attribution(std::span<const float> row, std::uint32_t prompt_len) {
  double prompt = 0.0, total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    total += row[j];
    if (j < prompt_len) prompt += row[j];
  }
  if (total <= 0.0) return 0.0;
  return prompt / total;
}

std::vector<double> source_attribution_scores(const DenoisingTrace& trace, std::uint32_t t) {
  const StepRecord& step = step_at(trace, t);
  const std::size_t n = trace.num_nodes();
  std::vector<double> out;
  for (std::size_t i = trace.prompt_len; i < n; ++i) {
    out.push_back(1.0 - source_attribution({step.attention.data() + i * n, n}, trace.prompt_len));
  }
  return out;
}

std::vector<double> predictive_entropy_scores(const DenoisingTrace& trace, std::uint32_t t) {
  if (!trace.has_entropy) {
    fail(ErrorCode::kInvalidArgument, "trace has no entropy channel");
  }
  const StepRecord& step = step_at(trace, t);
  return std::vector<double>(step.entropy.begin() + trace.prompt_len, step.entropy.end());
}

}  // namespace tdg
