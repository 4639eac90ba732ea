// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset-level orchestration shared by the CLI, the C API and the
// acceptance experiment.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdg/detector.hpp"
#include "tdg/manifest.hpp"
#include "tdg/metrics.hpp"
#include "tdg/trainer.hpp"

namespace tdg {

struct Corpus {
  Dataset dataset;
  std::vector<DenoisingTrace> traces;  // manifest order
  SplitSpec split_spec;
  Splits splits;
};

// Loads every blob, checks it against its manifest line, and splits.
Corpus load_corpus(const std::string& dir, std::optional<SplitSpec> split = std::nullopt,
                   unsigned jobs = 1);

const std::vector<std::size_t>& split_indices(const Corpus& c, const std::string& name);

std::vector<Example> corpus_examples(const Corpus& c, const DetectorConfig& cfg,
                                     const std::vector<std::size_t>& indices, unsigned jobs = 1);

EvalReport evaluate_model(const DetectorModel& model, const Corpus& c,
                          const std::vector<std::size_t>& indices, const std::string& method,
                          const std::string& split, unsigned jobs = 1);

// Token AUROCs of the heuristic baselines at t = 0 on the given traces.
// Keys: degree, source_attribution, predictive_entropy.
nlohmann::json token_baseline_aurocs(const Corpus& c, const std::vector<std::size_t>& indices,
                                     double tau);

// Response AUROC of the manifest's meta.oracle scores, when present.
std::optional<double> oracle_auroc(const Corpus& c, const std::vector<std::size_t>& indices);

struct TrainRun {
  TrainResult result;
  nlohmann::json meta;  // stored in the model file
};

TrainRun train_on_corpus(const Corpus& c, const TrainConfig& cfg, unsigned jobs = 1);

// Split spec and train config recorded by train_on_corpus.
std::optional<SplitSpec> model_split(const nlohmann::json& meta);
std::optional<TrainConfig> model_train_config(const nlohmann::json& meta);

// Modes: "static", "no-graph", "token-baselines". base supplies the
// hyperparameters for the retrained static and edgeless models.
nlohmann::json ablate(const Corpus& c, const DetectorModel& model, const TrainConfig& base,
                      const std::vector<std::string>& modes, unsigned jobs = 1);

nlohmann::json predict_json(const DetectorModel& model, const DenoisingTrace& trace);

nlohmann::json validation_json(const ValidationReport& report);

void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace tdg
