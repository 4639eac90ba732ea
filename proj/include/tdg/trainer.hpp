// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdg/detector.hpp"
#include "tdg/metrics.hpp"

namespace tdg {

struct TrainConfig {
  double lr = 1e-3;
  std::uint32_t batch_size = 32;
  double dropout = 0.1;
  std::uint32_t layers = 2;
  std::uint32_t hidden_dim = 128;
  std::uint32_t memory_dim = 0;  // 0: same as hidden_dim
  std::uint32_t heads = 4;
  double tau = -1.0;
  std::vector<std::uint32_t> keyframes;
  std::uint32_t max_epochs = 100;
  std::uint32_t patience = 10;
  std::uint64_t seed = 42;
  Task task = Task::kResponse;
  ModelKind kind = ModelKind::kTemporal;
  bool edges = true;
  double pos_weight = 1.0;  // loss weight on label-1 traces
  double clip_norm = 5.0;
};

void validate_train_config(const TrainConfig& c);
nlohmann::json train_config_to_json(const TrainConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
DetectorConfig detector_config(const TrainConfig& c, std::uint32_t feat_dim);

struct SplitSpec {
  std::size_t train = 1500;
  std::size_t val = 300;
  std::size_t test = 300;
  std::uint64_t seed = 42;
};

// 5:1:1 over n traces (1500/300/300 for 2100), seed 42.
SplitSpec default_split(std::size_t n);

struct Splits {
  std::vector<std::size_t> train, val, test;
};

// Seeded shuffle of [0, n), partitioned in order; each part sorted ascending.
Splits split_dataset(std::size_t n, const SplitSpec& spec);

struct Example {
  TemporalGraphSequence seq;
  TraceLabel label;
};

Example make_example(const DetectorConfig& cfg, const DenoisingTrace& trace,
                     const TraceLabel& label);

struct AdamState {
  std::vector<std::vector<float>> m, v;
  std::uint64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// One bias-corrected update from params' gradients.
void adam_step(nn::ParamStore<float>& params, AdamState& state, double lr,
               double beta1 = kAdamBeta1, double beta2 = kAdamBeta2, double eps = kAdamEps);

// Rescales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(nn::ParamStore<float>& params, double max_norm);

struct EpochRecord {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double val_auroc = 0.0;
};

struct TrainResult {
  DetectorModel model;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  std::uint32_t best_epoch = 0;
  double best_val_auroc = 0.0;
};

struct Scores {
  std::vector<double> response;
  std::vector<int> response_labels;
  std::vector<double> token;
  std::vector<int> token_labels;
};

// Eval-mode scores for every example; tokens only where labels exist and the
// model has a token head.
Scores score_examples(const DetectorModel& model, const std::vector<Example>& data,
                      unsigned jobs = 1);

// Validation metric for a task: response AUROC, or token AUROC for Task::kToken.
double task_auroc(const Scores& s, Task task);

// jobs > 1 evaluates a batch's traces concurrently; gradients are still summed
// in trace order, so results do not depend on jobs.
TrainResult train(const TrainConfig& cfg, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, unsigned jobs = 1);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

struct SearchSpace {
  std::vector<double> lr = {1e-5, 5e-5, 1e-4, 5e-4, 1e-3};
  std::vector<std::uint32_t> batch_size = {16, 32, 64};
  std::vector<double> dropout = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::uint32_t> layers = {2, 3, 4, 5};
  std::vector<std::uint32_t> hidden_dim = {64, 128, 256};
  std::vector<std::uint32_t> heads = {2, 4, 8};
};

SearchSpace search_space_from_json(const nlohmann::json& j);
nlohmann::json search_space_to_json(const SearchSpace& s);

// Cartesian product in lexicographic (lr, batch, dropout, layers, hidden, heads)
// order, each axis ascending; other fields copied from base.
std::vector<TrainConfig> enumerate_space(const SearchSpace& space, const TrainConfig& base);

bool config_less(const TrainConfig& a, const TrainConfig& b);

struct Trial {
  TrainConfig config;
  double val_auroc = 0.0;
  std::uint32_t best_epoch = 0;
};

struct GridResult {
  std::vector<Trial> leaderboard;  // best first; ties by config order
  std::size_t enumerated = 0;
};

// Without a budget every configuration is trained; otherwise a seeded subset
// of that size. Throws Error(kConfig) for budget < 1.
GridResult grid_search(const SearchSpace& space, const TrainConfig& base,
                       const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                       std::optional<std::size_t> budget, unsigned jobs = 1);

nlohmann::json leaderboard_to_json(const GridResult& r);

}  // namespace tdg
