// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Denoising traces: per-step head-averaged final-layer attention and hidden
// states for one prompt/response pair, plus the binary TDGT blob format.
//
// Blob layout (little-endian):
//   "TDGT" | u16 version=1 | u16 flags | u32 P | u32 R | u32 K | u32 D
//   K x { u32 t | (P+R)^2 f32 attention | (P+R)*D f32 hidden
//         | [flags&1] (P+R) f32 entropy | [flags&2] (P+R) u32 token ids }

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tdg {

inline constexpr char kTraceMagic[4] = {'T', 'D', 'G', 'T'};
inline constexpr std::uint16_t kTraceVersion = 1;
inline constexpr std::uint16_t kFlagEntropy = 1u << 0;
inline constexpr std::uint16_t kFlagTokenIds = 1u << 1;
// Reserved for per-head attention storage; readers reject it.
inline constexpr std::uint16_t kFlagPerHead = 1u << 2;

inline constexpr double kRowSumTolerance = 1e-3;

struct StepRecord {
  std::uint32_t t = 0;
  std::vector<float> attention;  // N x N row-major, row = query token
  std::vector<float> hidden;     // N x D row-major
  std::vector<float> entropy;    // N, empty when absent
  std::vector<std::uint32_t> token_ids;  // N, empty when absent

  bool operator==(const StepRecord&) const = default;
};

struct DenoisingTrace {
  std::uint32_t prompt_len = 0;
  std::uint32_t resp_len = 0;
  std::uint32_t hidden_dim = 0;
  bool has_entropy = false;
  bool has_token_ids = false;
  std::vector<StepRecord> steps;  // strictly descending t

  std::uint32_t num_nodes() const { return prompt_len + resp_len; }
  // Returns nullptr when no stored step has time t.
  const StepRecord* find_step(std::uint32_t t) const;

  bool operator==(const DenoisingTrace&) const = default;
};

struct TraceLabel {
  int response_label = 0;
  std::optional<std::vector<int>> token_labels;  // length R when present

  bool operator==(const TraceLabel&) const = default;
};

struct Violation {
  std::string invariant;  // stable identifier, e.g. "attention.row_sum"
  std::string detail;
};

using ValidationReport = std::vector<Violation>;

// Lists every violated invariant; empty iff the trace (and label) are valid.
ValidationReport validate_trace(const DenoisingTrace& trace,
                                const TraceLabel* label = nullptr);

// Throws Error(kInvariant) naming the first violation.
void require_valid(const DenoisingTrace& trace);

std::size_t write_trace(const DenoisingTrace& trace, std::ostream& out);
std::vector<std::uint8_t> encode_trace(const DenoisingTrace& trace);

DenoisingTrace read_trace(std::istream& in);
DenoisingTrace decode_trace(const std::vector<std::uint8_t>& bytes);

void save_trace(const DenoisingTrace& trace, const std::string& path);
DenoisingTrace load_trace(const std::string& path);

}  // namespace tdg
