// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "tdg/error.hpp"

namespace tdg {

namespace {

// Doubled mid-ranks (1-based): tied block [i, j) gets i + j + 1.
std::vector<std::int64_t> doubled_ranks(std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<std::int64_t> rank2(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const auto r = static_cast<std::int64_t>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = r;
    i = j;
  }
  return rank2;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorCode::kDimensionMismatch, "auroc: scores and labels differ in length");
  }
  for (double s : scores) {
    if (std::isnan(s)) fail(ErrorCode::kNumeric, "auroc: NaN score");
  }
  std::int64_t n_pos = 0;
  for (int l : labels) n_pos += (l != 0);
  const std::int64_t n_neg = static_cast<std::int64_t>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    fail(ErrorCode::kSingleClass, "auroc undefined: only one class present (" +
                                      std::to_string(n_pos) + " positive, " +
                                      std::to_string(n_neg) + " negative)");
  }
  const auto rank2 = doubled_ranks(scores);
  std::int64_t sum2 = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) sum2 += rank2[i];
  }
  // 2U = sum(2*rank_pos) - n_pos(n_pos+1); AUROC = U / (n_pos n_neg).
  const std::int64_t u2 = sum2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty()) {
    fail(ErrorCode::kDimensionMismatch, "accuracy: empty or mismatched input");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    hit += ((scores[i] >= threshold) == (labels[i] != 0));
  }
  return static_cast<double>(hit) / static_cast<double>(scores.size());
}

std::vector<double> rank_normalize(std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<double> out(n, 0.5);
  if (n < 2) return out;
  const auto rank2 = doubled_ranks(scores);
  // Doubled ranks lie in [2, 2n]; map linearly onto [0, 1].
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<double>(rank2[i] - 2) / static_cast<double>(2 * n - 2);
  }
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["split"] = r.split;
  j["response_auroc"] = r.response_auroc;
  j["token_auroc"] = r.token_auroc ? nlohmann::json(*r.token_auroc) : nlohmann::json(nullptr);
  j["accuracy"] = r.accuracy;
  j["n"] = r.n;
  j["n_tokens"] = r.n_tokens;
  return j;
}

}  // namespace tdg
