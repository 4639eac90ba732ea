// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/tdg.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <sstream>
#include <string>

#include "tdg/error.hpp"
#include "tdg/model_io.hpp"
#include "tdg/pipeline.hpp"
#include "tdg/synth.hpp"

struct tdg_trace {
  tdg::DenoisingTrace trace;
};

struct tdg_model {
  tdg::DetectorModel model;
  nlohmann::json meta = nlohmann::json::object();
};

namespace {

thread_local std::string g_last_error;

tdg_status set_error(tdg_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class Fn>
tdg_status guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return TDG_OK;
  } catch (const tdg::Error& e) {
    return set_error(static_cast<tdg_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(TDG_E_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(TDG_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TDG_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(TDG_E_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) {
    tdg::fail(tdg::ErrorCode::kInvalidArgument, std::string(name) + " must not be NULL");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_json(const char* text, const char* what) {
  if (text == nullptr) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    tdg::fail(tdg::ErrorCode::kConfig, std::string(what) + ": " + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

extern "C" {

const char* tdg_version(void) { return "1.0.0"; }

const char* tdg_last_error(void) { return g_last_error.c_str(); }

const char* tdg_status_name(tdg_status status) {
  return tdg::error_code_name(static_cast<tdg::ErrorCode>(status));
}

void tdg_string_free(char* s) { std::free(s); }

tdg_status tdg_trace_load(const char* path, tdg_trace** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto t = std::make_unique<tdg_trace>();
    t->trace = tdg::load_trace(path);
    *out = t.release();
  });
}

tdg_status tdg_trace_save(const tdg_trace* trace, const char* path) {
  return guard([&] {
    need(trace, "trace");
    need(path, "path");
    tdg::save_trace(trace->trace, path);
  });
}

void tdg_trace_free(tdg_trace* trace) { delete trace; }

tdg_status tdg_trace_dims(const tdg_trace* trace, uint32_t* prompt_len, uint32_t* resp_len,
                          uint32_t* steps, uint32_t* hidden_dim) {
  return guard([&] {
    need(trace, "trace");
    if (prompt_len) *prompt_len = trace->trace.prompt_len;
    if (resp_len) *resp_len = trace->trace.resp_len;
    if (steps) *steps = static_cast<uint32_t>(trace->trace.steps.size());
    if (hidden_dim) *hidden_dim = trace->trace.hidden_dim;
  });
}

tdg_status tdg_validate_files(const char* trace_path, const char* manifest_path, int* valid,
                              char** report_json) {
  return guard([&] {
    need(trace_path, "trace_path");
    need(valid, "valid");
    need(report_json, "report_json");
    const auto trace = tdg::load_trace(trace_path);
    tdg::ValidationReport report;
    if (manifest_path == nullptr) {
      report = tdg::validate_trace(trace);
    } else {
      namespace fs = std::filesystem;
      const auto entries = tdg::read_manifest(manifest_path);
      const fs::path base = fs::path(manifest_path).parent_path();
      const tdg::ManifestEntry* match = nullptr;
      for (const auto& e : entries) {
        std::error_code ec;
        if (fs::equivalent(base / e.trace, trace_path, ec)) {
          match = &e;
          break;
        }
      }
      if (match == nullptr) {
        report = tdg::validate_trace(trace);
        report.push_back({"manifest.entry", "no manifest line references this trace"});
      } else {
        report = tdg::check_manifest_entry(*match, trace);
      }
    }
    *valid = report.empty() ? 1 : 0;
    *report_json = dup_string(tdg::validation_json(report).dump());
  });
}

tdg_status tdg_model_init(const char* config_json, uint32_t feat_dim, tdg_model** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    const auto cfg = tdg::train_config_from_json(parse_json(config_json, "train config"));
    auto m = std::make_unique<tdg_model>();
    m->model = tdg::init_model(tdg::detector_config(cfg, feat_dim), tdg::mix_seed(cfg.seed, 1));
    m->meta["train_config"] = tdg::train_config_to_json(cfg);
    *out = m.release();
  });
}

tdg_status tdg_model_load(const char* path, tdg_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto m = std::make_unique<tdg_model>();
    m->model = tdg::load_model(path, &m->meta);
    *out = m.release();
  });
}

tdg_status tdg_model_save(const tdg_model* model, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    tdg::save_model(model->model, path, model->meta);
  });
}

void tdg_model_free(tdg_model* model) { delete model; }

tdg_status tdg_model_num_params(const tdg_model* model, size_t* count) {
  return guard([&] {
    need(model, "model");
    need(count, "count");
    *count = model->model.params.num_values();
  });
}

tdg_status tdg_predict(const tdg_model* model, const tdg_trace* trace, char** out_json) {
  return guard([&] {
    need(model, "model");
    need(trace, "trace");
    need(out_json, "out_json");
    *out_json = dup_string(tdg::predict_json(model->model, trace->trace).dump());
  });
}

tdg_status tdg_synth(const char* out_dir, size_t n, uint64_t seed, const char* spec_json,
                     char** manifest_path) {
  return guard([&] {
    need(out_dir, "out_dir");
    need(manifest_path, "manifest_path");
    auto spec = tdg::synth_spec_from_json(parse_json(spec_json, "synth spec"));
    spec.seed = seed;
    *manifest_path = dup_string(tdg::generate_dataset(spec, n, out_dir));
  });
}

tdg_status tdg_train(const char* data_dir, const char* config_json, const char* model_out,
                     const char* history_path, unsigned jobs, char** summary_json) {
  return guard([&] {
    need(data_dir, "data_dir");
    need(model_out, "model_out");
    need(summary_json, "summary_json");
    const auto cfg = tdg::train_config_from_json(parse_json(config_json, "train config"));
    const auto corpus = tdg::load_corpus(data_dir, std::nullopt, jobs);
    auto run = tdg::train_on_corpus(corpus, cfg, jobs);
    const std::string history =
        history_path ? std::string(history_path) : std::string(model_out) + ".history.csv";
    tdg::save_model(run.result.model, model_out, run.meta);
    tdg::write_history_csv(run.result.history, history);
    nlohmann::json summary = run.meta;
    summary["model"] = model_out;
    summary["history"] = history;
    *summary_json = dup_string(summary.dump());
  });
}

tdg_status tdg_gridsearch(const char* data_dir, const char* space_json, size_t budget,
                          unsigned jobs, char** leaderboard_json) {
  return guard([&] {
    need(data_dir, "data_dir");
    need(leaderboard_json, "leaderboard_json");
    auto j = parse_json(space_json, "search space");
    tdg::TrainConfig base;
    if (j.is_object() && j.contains("base")) {
      base = tdg::train_config_from_json(j["base"]);
      j.erase("base");
    }
    const auto space = tdg::search_space_from_json(j);
    const auto corpus = tdg::load_corpus(data_dir, std::nullopt, jobs);
    const auto probe = tdg::detector_config(base, corpus.traces.front().hidden_dim + 1);
    const auto tr = tdg::corpus_examples(corpus, probe, corpus.splits.train, jobs);
    const auto va = tdg::corpus_examples(corpus, probe, corpus.splits.val, jobs);
    const auto result = tdg::grid_search(
        space, base, tr, va, budget == 0 ? std::nullopt : std::optional<std::size_t>(budget), jobs);
    *leaderboard_json = dup_string(tdg::leaderboard_to_json(result).dump());
  });
}

tdg_status tdg_grid_size(const char* space_json, size_t* count) {
  return guard([&] {
    need(count, "count");
    auto j = parse_json(space_json, "search space");
    if (j.is_object()) j.erase("base");
    *count = tdg::enumerate_space(tdg::search_space_from_json(j), tdg::TrainConfig{}).size();
  });
}

tdg_status tdg_eval(const char* model_path, const char* data_dir, const char* split,
                    unsigned jobs, char** report_json) {
  return guard([&] {
    need(model_path, "model_path");
    need(data_dir, "data_dir");
    need(report_json, "report_json");
    nlohmann::json meta;
    const auto model = tdg::load_model(model_path, &meta);
    const auto corpus = tdg::load_corpus(data_dir, tdg::model_split(meta), jobs);
    const std::string name = split ? split : "test";
    const auto report = tdg::evaluate_model(model, corpus, tdg::split_indices(corpus, name),
                                            model.config.kind == tdg::ModelKind::kTemporal
                                                ? "tdgnet"
                                                : "static",
                                            name, jobs);
    *report_json = dup_string(tdg::to_json(report).dump());
  });
}

tdg_status tdg_ablate(const char* data_dir, const char* model_path, const char* modes,
                      unsigned jobs, char** report_json) {
  return guard([&] {
    need(data_dir, "data_dir");
    need(model_path, "model_path");
    need(report_json, "report_json");
    nlohmann::json meta;
    const auto model = tdg::load_model(model_path, &meta);
    const auto corpus = tdg::load_corpus(data_dir, tdg::model_split(meta), jobs);
    tdg::TrainConfig base;
    if (auto c = tdg::model_train_config(meta)) base = *c;
    const auto list = split_csv(modes ? modes : "static,no-graph,token-baselines");
    *report_json = dup_string(tdg::ablate(corpus, model, base, list, jobs).dump());
  });
}

}  // extern "C"
