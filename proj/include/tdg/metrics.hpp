// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace tdg {

// Mann-Whitney AUROC: P(score_pos > score_neg) with ties counted 1/2.
// Computed from doubled mid-ranks in integer arithmetic. Throws
// Error(kSingleClass) when either class is absent.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Fraction of (score >= threshold) == label.
double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

// Maps scores to mid-ranks scaled into [0,1]; ties share a value.
std::vector<double> rank_normalize(std::span<const double> scores);

struct EvalReport {
  std::string method;
  std::string split;
  double response_auroc = 0.0;
  std::optional<double> token_auroc;
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t n_tokens = 0;
};

nlohmann::json to_json(const EvalReport& r);

}  // namespace tdg
