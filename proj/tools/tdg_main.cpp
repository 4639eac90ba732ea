// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// tdg: command-line front end over the C API.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdg/tdg.h"

namespace {

using json = nlohmann::json;

constexpr int kExitViolations = 1;
constexpr int kExitError = 2;

struct Failure {
  std::string status;
  int code;
  std::string message;
};

void print_failure(const Failure& f) {
  json line = {{"error", {{"status", f.status}, {"code", f.code}, {"message", f.message}}}};
  std::cerr << line.dump() << std::endl;
}

void check(tdg_status s) {
  if (s != TDG_OK) throw Failure{tdg_status_name(s), static_cast<int>(s), tdg_last_error()};
}

struct CString {
  char* p = nullptr;
  ~CString() { tdg_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

std::uint64_t default_seed(std::uint64_t fallback) {
  const char* env = std::getenv("TDG_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == nullptr || *end != '\0') {
    throw Failure{"invalid_argument", TDG_E_INVALID_ARGUMENT,
                  std::string("TDG_SEED is not an unsigned integer: ") + env};
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{"io", TDG_E_IO, "cannot open " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Failure{"config", TDG_E_CONFIG, path + ": " + e.what()};
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Failure{"io", TDG_E_IO, "cannot open for writing: " + path};
  out << text << '\n';
}

json parse_mix(const std::string& text) {
  json mix = json::object();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Failure{"invalid_argument", TDG_E_INVALID_ARGUMENT,
                    "--mix expects class=weight pairs, got " + item};
    }
    try {
      mix[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw Failure{"invalid_argument", TDG_E_INVALID_ARGUMENT, "bad weight in --mix: " + item};
    }
  }
  return mix;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal attention-graph hallucination detector"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tdg_version());

  std::uint64_t synth_seed_default = 0;
  std::uint64_t train_seed_default = 42;
  try {
    synth_seed_default = default_seed(synth_seed_default);
    train_seed_default = default_seed(train_seed_default);
  } catch (const Failure& f) {
    print_failure(f);
    return kExitError;
  }

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic dataset");
  std::string synth_out, synth_mix;
  std::size_t synth_n = 0;
  std::uint64_t synth_seed = synth_seed_default;
  std::optional<std::uint32_t> synth_tokens, synth_prompt, synth_steps, synth_dim;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", synth_n, "Number of traces")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Dataset seed (TDG_SEED overrides the default)")
      ->capture_default_str();
  synth->add_option("--mix", synth_mix,
                    "Class mix, e.g. SC=0.35,CD=0.35,SF=0.1,SD=0.1,PE=0.1 (omitted classes get 0)");
  synth->add_option("--tokens", synth_tokens, "Response tokens R [24]");
  synth->add_option("--prompt", synth_prompt, "Prompt tokens P [8]");
  synth->add_option("--steps", synth_steps, "Denoising steps T [16]");
  synth->add_option("--dim", synth_dim, "Hidden dimension D [16]");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a trace blob (and its manifest line)");
  std::string val_trace, val_manifest;
  validate->add_option("--trace", val_trace, "Trace blob")->required();
  validate->add_option("--manifest", val_manifest, "Manifest referencing the blob");

  // train
  auto* train = app.add_subcommand("train", "Train a detector");
  std::string train_data, train_config, train_out;
  unsigned train_jobs = 1;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "Train config JSON")->required();
  train->add_option("--out", train_out, "Model file; history goes to MODEL.history.csv")
      ->required();
  train->add_option("--jobs", train_jobs, "Worker threads")->capture_default_str();

  // gridsearch
  auto* grid = app.add_subcommand("gridsearch", "Hyperparameter grid search");
  std::string grid_data, grid_space, grid_out;
  std::size_t grid_budget = 0;
  unsigned grid_jobs = 1;
  grid->add_option("--data", grid_data, "Dataset directory")->required();
  grid->add_option("--space", grid_space, "Search space JSON (optional \"base\" train config)")
      ->required();
  grid->add_option("--out", grid_out, "Output directory for leaderboard.json")->required();
  grid->add_option("--budget", grid_budget, "Train a seeded subset of this many configs")
      ->check(CLI::PositiveNumber);
  grid->add_option("--jobs", grid_jobs, "Concurrent trials")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset split");
  std::string eval_model, eval_data, eval_split = "test", eval_report;
  unsigned eval_jobs = 1;
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--split", eval_split, "train|val|test")->capture_default_str();
  eval->add_option("--report", eval_report, "Report JSON path");
  eval->add_option("--jobs", eval_jobs, "Worker threads")->capture_default_str();

  // predict
  auto* predict = app.add_subcommand("predict", "Score one trace");
  std::string pred_model, pred_trace;
  predict->add_option("--model", pred_model, "Model file")->required();
  predict->add_option("--trace", pred_trace, "Trace blob")->required();

  // ablate
  auto* abl = app.add_subcommand("ablate", "Static, edgeless and token-baseline comparisons");
  std::string abl_data, abl_model, abl_modes = "static,no-graph,token-baselines", abl_report;
  unsigned abl_jobs = 1;
  abl->add_option("--data", abl_data, "Dataset directory")->required();
  abl->add_option("--model", abl_model, "Trained temporal model")->required();
  abl->add_option("--modes", abl_modes, "Comma-separated modes")->capture_default_str();
  abl->add_option("--report", abl_report, "Report JSON path");
  abl->add_option("--jobs", abl_jobs, "Worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_failure({"usage", TDG_E_INVALID_ARGUMENT, e.what()});
    return kExitError;
  }

  try {
    if (*synth) {
      json spec = json::object();
      if (!synth_mix.empty()) spec["mix"] = parse_mix(synth_mix);
      if (synth_tokens) spec["resp_len"] = *synth_tokens;
      if (synth_prompt) spec["prompt_len"] = *synth_prompt;
      if (synth_steps) spec["steps"] = *synth_steps;
      if (synth_dim) spec["hidden_dim"] = *synth_dim;
      CString manifest;
      check(tdg_synth(synth_out.c_str(), synth_n, synth_seed, spec.dump().c_str(), &manifest.p));
      std::cout << json{{"manifest", manifest.str()}, {"n", synth_n}, {"seed", synth_seed}}.dump()
                << std::endl;
    } else if (*validate) {
      int valid = 0;
      CString report;
      check(tdg_validate_files(val_trace.c_str(),
                               val_manifest.empty() ? nullptr : val_manifest.c_str(), &valid,
                               &report.p));
      std::cout << json::parse(report.str()).dump(2) << std::endl;
      return valid ? 0 : kExitViolations;
    } else if (*train) {
      json cfg = parse_file(train_config);
      if (cfg.is_object() && !cfg.contains("seed")) cfg["seed"] = train_seed_default;
      CString summary;
      check(tdg_train(train_data.c_str(), cfg.dump().c_str(), train_out.c_str(), nullptr,
                      train_jobs, &summary.p));
      std::cout << json::parse(summary.str()).dump(2) << std::endl;
    } else if (*grid) {
      json space = parse_file(grid_space);
      if (space.is_object()) {
        json& base = space["base"];
        if (base.is_null()) base = json::object();
        if (!base.contains("seed")) base["seed"] = train_seed_default;
      }
      CString board;
      check(tdg_gridsearch(grid_data.c_str(), space.dump().c_str(), grid_budget, grid_jobs,
                           &board.p));
      const json result = json::parse(board.str());
      std::error_code ec;
      std::filesystem::create_directories(grid_out, ec);
      if (ec) throw Failure{"io", TDG_E_IO, "cannot create " + grid_out + ": " + ec.message()};
      write_file((std::filesystem::path(grid_out) / "leaderboard.json").string(), result.dump(2));
      std::cout << json{{"enumerated", result["enumerated"]},
                        {"trained", result["trained"]},
                        {"best", result.value("best", json(nullptr))}}
                       .dump(2)
                << std::endl;
    } else if (*eval) {
      CString report;
      check(tdg_eval(eval_model.c_str(), eval_data.c_str(), eval_split.c_str(), eval_jobs,
                     &report.p));
      const std::string text = json::parse(report.str()).dump(2);
      if (!eval_report.empty()) write_file(eval_report, text);
      std::cout << text << std::endl;
    } else if (*predict) {
      tdg_model* model = nullptr;
      check(tdg_model_load(pred_model.c_str(), &model));
      std::unique_ptr<tdg_model, void (*)(tdg_model*)> model_guard(model, tdg_model_free);
      tdg_trace* trace = nullptr;
      check(tdg_trace_load(pred_trace.c_str(), &trace));
      std::unique_ptr<tdg_trace, void (*)(tdg_trace*)> trace_guard(trace, tdg_trace_free);
      CString out;
      check(tdg_predict(model, trace, &out.p));
      std::cout << out.str() << std::endl;
    } else if (*abl) {
      CString report;
      check(tdg_ablate(abl_data.c_str(), abl_model.c_str(), abl_modes.c_str(), abl_jobs,
                       &report.p));
      const std::string text = json::parse(report.str()).dump(2);
      if (!abl_report.empty()) write_file(abl_report, text);
      std::cout << text << std::endl;
    }
  } catch (const Failure& f) {
    print_failure(f);
    return kExitError;
  } catch (const std::exception& e) {
    print_failure({"internal", TDG_E_INTERNAL, e.what()});
    return kExitError;
  }
  return 0;
}
