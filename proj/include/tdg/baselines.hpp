// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Token-level heuristic scores. Every *_scores function returns one value per
// response token, higher meaning more likely hallucinated. Signals are read at
// step t (default 0, the final denoising step).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tdg/graph.hpp"
#include "tdg/trace.hpp"

namespace tdg {

// In-degree of every node: count of edges (j -> i) per i.
std::vector<std::uint32_t> token_degree(const GraphSnapshot& snap);

// -in-degree of each response node, rank-normalized to [0, 1].
std::vector<double> degree_scores(const GraphSnapshot& snap, std::uint32_t prompt_len);

// Share of a row's attention mass on the first prompt_len columns.
double source_attribution(std::span<const float> row, std::uint32_t prompt_len);

// 1 - source_attribution per response row at step t.
std::vector<double> source_attribution_scores(const DenoisingTrace& trace, std::uint32_t t = 0);

// Stored entropy per response token at step t.
std::vector<double> predictive_entropy_scores(const DenoisingTrace& trace, std::uint32_t t = 0);

}  // namespace tdg
