// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "parallel.hpp"
#include "tdg/baselines.hpp"
#include "tdg/error.hpp"
#include "tdg/graph.hpp"

namespace tdg {

namespace {

double test_auroc(const DetectorModel& model, const std::vector<Example>& data, unsigned jobs) {
  const auto s = score_examples(model, data, jobs);
  return auroc(s.response, s.response_labels);
}

bool has_mode(const std::vector<std::string>& modes, const std::string& m) {
  return std::find(modes.begin(), modes.end(), m) != modes.end();
}

}  // namespace

Corpus load_corpus(const std::string& dir, std::optional<SplitSpec> split, unsigned jobs) {
  Corpus c{Dataset::open(dir), {}, {}, {}};
  const std::size_t n = c.dataset.size();
  c.traces.resize(n);
  detail::parallel_for(n, jobs, [&](std::size_t i) {
    c.traces[i] = c.dataset.load(i);
    const auto report = check_manifest_entry(c.dataset.entry(i), c.traces[i]);
    if (!report.empty()) {
      fail(ErrorCode::kInvariant, c.dataset.trace_path(i) + ": " + report.front().invariant +
                                      ": " + report.front().detail);
    }
  });
  c.split_spec = split ? *split : default_split(n);
  c.splits = split_dataset(n, c.split_spec);
  return c;
}

const std::vector<std::size_t>& split_indices(const Corpus& c, const std::string& name) {
  if (name == "train") return c.splits.train;
  if (name == "val") return c.splits.val;
  if (name == "test") return c.splits.test;
  fail(ErrorCode::kInvalidArgument, "unknown split " + name + " (expected train|val|test)");
}

std::vector<Example> corpus_examples(const Corpus& c, const DetectorConfig& cfg,
                                     const std::vector<std::size_t>& indices, unsigned jobs) {
  std::vector<Example> out(indices.size());
  detail::parallel_for(indices.size(), jobs, [&](std::size_t k) {
    const std::size_t i = indices[k];
    out[k] = make_example(cfg, c.traces.at(i), c.dataset.entry(i).label);
  });
  return out;
}

EvalReport evaluate_model(const DetectorModel& model, const Corpus& c,
                          const std::vector<std::size_t>& indices, const std::string& method,
                          const std::string& split, unsigned jobs) {
  if (indices.empty()) fail(ErrorCode::kInvalidArgument, "split " + split + " is empty");
  const auto data = corpus_examples(c, model.config, indices, jobs);
  const auto s = score_examples(model, data, jobs);
  EvalReport r;
  r.method = method;
  r.split = split;
  r.n = s.response.size();
  try {
    r.response_auroc = auroc(s.response, s.response_labels);
  } catch (const Error& e) {
    fail(e.code(), "split " + split + ": " + e.what());
  }
  r.accuracy = accuracy(s.response, s.response_labels);
  r.n_tokens = s.token.size();
  if (!s.token.empty()) {
    const bool pos = std::count(s.token_labels.begin(), s.token_labels.end(), 1) > 0;
    const bool neg = std::count(s.token_labels.begin(), s.token_labels.end(), 0) > 0;
    if (pos && neg) r.token_auroc = auroc(s.token, s.token_labels);
  }
  return r;
}

nlohmann::json token_baseline_aurocs(const Corpus& c, const std::vector<std::size_t>& indices,
                                     double tau) {
  std::vector<double> degree, source, entropy;
  std::vector<int> labels;
  bool have_entropy = true;
  for (std::size_t i : indices) {
    const auto& trace = c.traces.at(i);
    const auto& label = c.dataset.entry(i).label;
    if (!label.token_labels) continue;
    const std::uint32_t t0 = 0;
    const double tr_tau = tau < 0.0 ? default_tau(trace.prompt_len, trace.resp_len) : tau;
    const auto seq = build_sequence(trace, tr_tau, std::span<const std::uint32_t>(&t0, 1));
    const auto d = degree_scores(seq.snapshots.front(), trace.prompt_len);
    const auto s = source_attribution_scores(trace, 0);
    degree.insert(degree.end(), d.begin(), d.end());
    source.insert(source.end(), s.begin(), s.end());
    if (trace.has_entropy) {
      const auto e = predictive_entropy_scores(trace, 0);
      entropy.insert(entropy.end(), e.begin(), e.end());
    } else {
      have_entropy = false;
    }
    labels.insert(labels.end(), label.token_labels->begin(), label.token_labels->end());
  }
  if (labels.empty()) fail(ErrorCode::kInvalidArgument, "no token labels in the split");
  nlohmann::json j;
  j["degree"] = auroc(degree, labels);
  j["source_attribution"] = auroc(source, labels);
  j["predictive_entropy"] = have_entropy ? nlohmann::json(auroc(entropy, labels))
                                         : nlohmann::json(nullptr);
  j["n_tokens"] = labels.size();
  return j;
}

std::optional<double> oracle_auroc(const Corpus& c, const std::vector<std::size_t>& indices) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i : indices) {
    const auto& e = c.dataset.entry(i);
    if (!e.meta.contains("oracle")) return std::nullopt;
    scores.push_back(e.meta["oracle"].get<double>());
    labels.push_back(e.label.response_label);
  }
  return auroc(scores, labels);
}

TrainRun train_on_corpus(const Corpus& c, const TrainConfig& cfg, unsigned jobs) {
  if (c.traces.empty()) fail(ErrorCode::kInvalidArgument, "empty corpus");
  const DetectorConfig dcfg = detector_config(cfg, c.traces.front().hidden_dim + 1);
  const auto tr = corpus_examples(c, dcfg, c.splits.train, jobs);
  const auto va = corpus_examples(c, dcfg, c.splits.val, jobs);
  TrainRun run;
  run.result = train(cfg, tr, va, jobs);
  run.meta["train_config"] = train_config_to_json(cfg);
  run.meta["split"] = {{"train", c.split_spec.train},
                       {"val", c.split_spec.val},
                       {"test", c.split_spec.test},
                       {"seed", c.split_spec.seed}};
  run.meta["best_epoch"] = run.result.best_epoch;
  run.meta["best_val_auroc"] = run.result.best_val_auroc;
  run.meta["epochs_run"] = run.result.history.size();
  return run;
}

std::optional<SplitSpec> model_split(const nlohmann::json& meta) {
  if (!meta.is_object() || !meta.contains("split")) return std::nullopt;
  const auto& s = meta["split"];
  SplitSpec spec;
  spec.train = s.at("train").get<std::size_t>();
  spec.val = s.at("val").get<std::size_t>();
  spec.test = s.at("test").get<std::size_t>();
  spec.seed = s.at("seed").get<std::uint64_t>();
  return spec;
}

std::optional<TrainConfig> model_train_config(const nlohmann::json& meta) {
  if (!meta.is_object() || !meta.contains("train_config")) return std::nullopt;
  return train_config_from_json(meta["train_config"]);
}

nlohmann::json ablate(const Corpus& c, const DetectorModel& model, const TrainConfig& base,
                      const std::vector<std::string>& modes, unsigned jobs) {
  for (const auto& m : modes) {
    if (m != "static" && m != "no-graph" && m != "token-baselines") {
      fail(ErrorCode::kInvalidArgument,
           "unknown ablation mode " + m + " (expected static, no-graph, token-baselines)");
    }
  }
  nlohmann::json report;
  report["split"] = "test";
  report["n_test"] = c.splits.test.size();
  const auto test = corpus_examples(c, model.config, c.splits.test, jobs);
  const double full = test_auroc(model, test, jobs);
  report["model_auroc"] = full;
  if (auto o = oracle_auroc(c, c.splits.test)) report["oracle_auroc"] = *o;

  if (has_mode(modes, "static")) {
    const auto keyframes = sequence_keyframes(model.config, c.traces.front());
    nlohmann::json rows = nlohmann::json::array();
    double best = -1.0;
    std::uint32_t best_t = 0;
    for (std::uint32_t t : keyframes) {
      TrainConfig sc = base;
      sc.kind = ModelKind::kStatic;
      sc.keyframes = {t};
      sc.task = Task::kResponse;
      auto run = train_on_corpus(c, sc, jobs);
      const auto data = corpus_examples(c, run.result.model.config, c.splits.test, jobs);
      const double a = test_auroc(run.result.model, data, jobs);
      rows.push_back({{"t", t},
                      {"val_auroc", run.result.best_val_auroc},
                      {"test_auroc", a},
                      {"best_epoch", run.result.best_epoch}});
      if (a > best) {
        best = a;
        best_t = t;
      }
    }
    report["static"] = {{"per_keyframe", rows},
                        {"best_t", best_t},
                        {"best_auroc", best},
                        {"gap", full - best}};
  }

  if (has_mode(modes, "no-graph")) {
    std::vector<Example> stripped = test;
    for (auto& e : stripped) e.seq = strip_edges(e.seq);
    const double stripped_auroc = test_auroc(model, stripped, jobs);
    TrainConfig ng = base;
    ng.edges = false;
    ng.kind = ModelKind::kTemporal;
    auto run = train_on_corpus(c, ng, jobs);
    const auto data = corpus_examples(c, run.result.model.config, c.splits.test, jobs);
    const double retrained = test_auroc(run.result.model, data, jobs);
    report["no_graph"] = {{"edges_removed_auroc", stripped_auroc},
                          {"retrained_auroc", retrained},
                          {"delta_edges_removed", full - stripped_auroc},
                          {"delta_retrained", full - retrained}};
  }

  if (has_mode(modes, "token-baselines")) {
    auto tb = token_baseline_aurocs(c, c.splits.test, model.config.tau);
    if (model.config.kind == ModelKind::kTemporal) {
      const auto r = evaluate_model(model, c, c.splits.test, "tdgnet", "test", jobs);
      tb["tdgnet"] = r.token_auroc ? nlohmann::json(*r.token_auroc) : nlohmann::json(nullptr);
      tb["tdgnet_token_head_trained"] = base.task != Task::kResponse;
    }
    report["token_baselines"] = tb;
  }
  return report;
}

nlohmann::json predict_json(const DetectorModel& model, const DenoisingTrace& trace) {
  require_valid(trace);
  const auto seq = model_sequence(model.config, trace);
  const auto out = forward_trace(model, seq);
  nlohmann::json j;
  j["response_prob"] = out.response_prob;
  if (model.config.kind == ModelKind::kTemporal) {
    j["token_probs"] = out.token_probs;
  } else {
    j["token_probs"] = nullptr;
  }
  return j;
}

nlohmann::json validation_json(const ValidationReport& report) {
  nlohmann::json j;
  j["valid"] = report.empty();
  j["violations"] = nlohmann::json::array();
  for (const auto& v : report) {
    j["violations"].push_back({{"invariant", v.invariant}, {"detail", v.detail}});
  }
  return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, path + ": " + e.what());
  }
}

}  // namespace tdg
