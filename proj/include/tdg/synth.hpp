// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic denoising traces built from five attention-dynamics classes.
//
// Response rows put mass beta(t) on a target set and spread the rest
// uniformly over the other columns. StableFactual rows all sit at beta_high
// on the prompt anchors. Every other class has `focal_tokens` rows on the
// class schedule; the remaining "background" rows hold a constant level:
//   SelfCorrection    focal: anchors, beta_low -> beta_high
//   CorrectnessDecay  focal: anchors, beta_high -> beta_low
//   PersistentError   focal: distractor clique, constant beta_high
//   SemanticDrift     focal: one distractor, moving every ceil(T/4) steps
// Hidden states encode only |beta - midpoint| on channel 0.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdg/trace.hpp"

namespace tdg {

enum class DynamicsClass : int {
  kSelfCorrection = 0,
  kStableFactual = 1,
  kCorrectnessDecay = 2,
  kSemanticDrift = 3,
  kPersistentError = 4,
};

inline constexpr std::size_t kNumClasses = 5;

const char* class_name(DynamicsClass c);
// Accepts the full name or its initials (SC, SF, CD, SD, PE).
DynamicsClass class_from_name(const std::string& name);
int class_label(DynamicsClass c);

struct SynthSpec {
  std::uint32_t prompt_len = 8;
  std::uint32_t resp_len = 24;
  std::uint32_t steps = 16;
  std::uint32_t hidden_dim = 16;
  std::uint32_t anchors = 3;
  std::uint32_t distractors = 3;
  double beta_high = 0.8;
  double beta_low = 0.1;
  double sigma = 0.1;
  // Indexed by DynamicsClass.
  std::array<double, kNumClasses> mix = {0.35, 0.10, 0.35, 0.10, 0.10};
  std::uint64_t seed = 0;
  // Rows on the class schedule in non-StableFactual traces.
  std::uint32_t focal_tokens = 1;
  // Dirichlet concentration of the per-trace background composition.
  double background_concentration = 0.5;
  // Store every step T..0 instead of only the default keyframes.
  bool all_steps = false;
};

// Throws Error(kConfig) naming the first violated constraint.
void validate_spec(const SynthSpec& spec);

// Keys mirror the field names; "mix" maps class names (or SC, SF, CD, SD, PE)
// to weights, and classes left out get weight 0. Missing keys keep defaults.
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

struct LatentRecord {
  DynamicsClass cls = DynamicsClass::kStableFactual;
  std::vector<std::uint32_t> anchors;      // prompt node indices
  std::vector<std::uint32_t> distractors;  // response node indices
  std::vector<std::uint32_t> focal;        // response node indices; empty for StableFactual
  std::vector<std::uint32_t> times;        // stored steps, descending
  // Per response row r (node P + r), per stored step: target mass and targets.
  std::vector<std::vector<double>> beta;
  std::vector<std::vector<std::vector<std::uint32_t>>> targets;
};

struct SynthSample {
  DenoisingTrace trace;
  TraceLabel label;
  LatentRecord latent;
};

SynthSample generate_trace(DynamicsClass cls, const SynthSpec& spec, std::uint64_t seed);

// Largest-remainder split of n over spec.mix; ties go to the lower class index.
std::array<std::size_t, kNumClasses> class_counts(const SynthSpec& spec, std::size_t n);

// Writes traces/NNNNNN.tdgt blobs plus manifest.jsonl; returns the manifest path.
std::string generate_dataset(const SynthSpec& spec, std::size_t n_traces,
                             const std::string& out_dir);

// Per-trace seed used by generate_dataset for index i.
std::uint64_t trace_seed(const SynthSpec& spec, std::size_t index);

// 1 when a scheduled row ends on response targets or loses target mass
// between the first and last stored step, else 0.
double oracle_score(const LatentRecord& latent);

}  // namespace tdg
