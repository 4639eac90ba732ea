// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Graph detectors over TemporalGraphSequence.
//
// Temporal (TDGNet): per keyframe in descending t
//   h_i   = W_node x_i
//   m_i   = mean over edges (j -> i) of psi([h_j, h_i, w_ji])   (0 if no edges)
//   s_i   = GRU(m_i, s_i_prev),  s starts at 0
//   z_i   = W_lat s_i
// then per node and head a softmax over keyframes of q_h . s_i^k weights the
// z_i^k; heads are concatenated and projected when there is more than one.
// Response probability pools the response nodes, token probabilities read
// each response node.
//
// Static: one snapshot, z_i = ReLU(W_u [h_i, m_i] + b_u), pooled the same way.
//
// Response nodes are the nodes whose is_prompt channel is 0.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdg/graph.hpp"
#include "tdg/nn.hpp"
#include "tdg/rng.hpp"

namespace tdg {

enum class ModelKind { kTemporal, kStatic };

enum class Task { kResponse, kToken, kBoth };

const char* task_name(Task t);
Task task_from_name(const std::string& name);

struct DetectorConfig {
  ModelKind kind = ModelKind::kTemporal;
  std::uint32_t feat_dim = 17;  // D + 1
  std::uint32_t d_hidden = 128;
  std::uint32_t d_memory = 128;
  std::uint32_t layers = 2;  // message MLP depth
  std::uint32_t heads = 4;
  double dropout = 0.1;
  double tau = -1.0;                      // < 0: 2 / (P + R)
  std::vector<std::uint32_t> keyframes;   // empty: default for the trace
  bool edges = true;                      // false: every edge list is emptied
};

void validate_config(const DetectorConfig& cfg);
nlohmann::json config_to_json(const DetectorConfig& cfg);
DetectorConfig config_from_json(const nlohmann::json& j);

// Parameter ids inside the model's ParamStore. Members unused by a kind stay
// default-constructed.
struct DetectorLayout {
  nn::Linear w_node;
  nn::Mlp message;
  // temporal
  nn::GruParams gru;
  nn::Linear latent;
  std::vector<std::size_t> queries;  // one d_memory x 1 tensor per head
  nn::Linear head_proj;              // heads * d_memory -> d_memory, heads > 1 only
  nn::Linear f_token;
  // static
  nn::Linear update;
  // both
  nn::Linear f_seq;
};

struct DetectorModel {
  DetectorConfig config;
  DetectorLayout layout;
  nn::ParamStore<float> params;
};

// Deterministic given (config, seed). Throws Error(kConfig) on bad dims.
DetectorModel init_model(const DetectorConfig& cfg, std::uint64_t seed);

double sequence_tau(const DetectorConfig& cfg, std::uint32_t prompt_len, std::uint32_t resp_len);
std::vector<std::uint32_t> sequence_keyframes(const DetectorConfig& cfg, const DenoisingTrace& trace);
TemporalGraphSequence model_sequence(const DetectorConfig& cfg, const DenoisingTrace& trace);

template <class Real>
struct ForwardInternals {
  std::size_t message_calls = 0;
  // alpha[node][head][k]
  std::vector<std::vector<std::vector<Real>>> alpha;
  // memory[k][node * d_memory + c]
  std::vector<std::vector<Real>> memory;
};

template <class Real>
struct ForwardOutput {
  Real response_logit = 0;
  Real response_prob = 0;
  std::vector<std::uint32_t> response_nodes;
  std::vector<Real> token_logits;  // one per response node, in node order
  std::vector<Real> token_probs;
  ForwardInternals<Real> internals;
};

struct ForwardOptions {
  bool train = false;
  Rng* dropout_rng = nullptr;  // required when train and dropout > 0
};

template <class Real>
ForwardOutput<Real> forward(const DetectorConfig& cfg, const DetectorLayout& layout,
                            const nn::ParamStore<Real>& params, const TemporalGraphSequence& seq,
                            const ForwardOptions& opt = {});

ForwardOutput<float> forward_trace(const DetectorModel& model, const TemporalGraphSequence& seq,
                                   const ForwardOptions& opt = {});

// Same model on the sequence with every edge removed.
ForwardOutput<float> no_graph_forward(const DetectorModel& model, const TemporalGraphSequence& seq);

// Loss for one labelled sequence: response BCE, mean token BCE over the
// labelled response nodes, or their sum. When backward is set, gradients are
// accumulated into params.
template <class Real>
double sample_loss(const DetectorConfig& cfg, const DetectorLayout& layout,
                   nn::ParamStore<Real>& params, const TemporalGraphSequence& seq,
                   const TraceLabel& label, Task task, const ForwardOptions& opt, bool backward);

}  // namespace tdg
