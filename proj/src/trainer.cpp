// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

#include "parallel.hpp"
#include "tdg/error.hpp"

namespace tdg {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSubsetStream = 0x6A1DULL;

const std::set<std::string> kTrainKeys = {
    "lr",        "batch_size", "dropout", "layers", "hidden_dim", "memory_dim",
    "heads",     "tau",        "keyframes", "max_epochs", "patience", "seed",
    "task",      "model",      "edges",     "pos_weight", "clip_norm"};

template <class T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

auto config_key(const TrainConfig& c) {
  return std::make_tuple(c.lr, c.batch_size, c.dropout, c.layers, c.hidden_dim, c.heads);
}

}  // namespace

void validate_train_config(const TrainConfig& c) {
  auto bad = [](const std::string& msg) { fail(ErrorCode::kConfig, "train config: " + msg); };
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) bad("lr must be > 0");
  if (c.batch_size < 1) bad("batch_size must be >= 1");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (c.layers < 1) bad("layers must be >= 1");
  if (c.hidden_dim < 1) bad("hidden_dim must be >= 1");
  if (c.heads < 1) bad("heads must be >= 1");
  if (c.max_epochs < 1) bad("max_epochs must be >= 1");
  if (!(c.pos_weight > 0.0)) bad("pos_weight must be > 0");
  if (!(c.clip_norm > 0.0)) bad("clip_norm must be > 0");
  if (c.kind == ModelKind::kStatic && c.task != Task::kResponse) {
    bad("static models support only the response task");
  }
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["dropout"] = c.dropout;
  j["layers"] = c.layers;
  j["hidden_dim"] = c.hidden_dim;
  j["memory_dim"] = c.memory_dim;
  j["heads"] = c.heads;
  j["tau"] = c.tau < 0.0 ? nlohmann::json(nullptr) : nlohmann::json(c.tau);
  j["keyframes"] = c.keyframes;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["task"] = task_name(c.task);
  j["model"] = c.kind == ModelKind::kTemporal ? "temporal" : "static";
  j["edges"] = c.edges;
  j["pos_weight"] = c.pos_weight;
  j["clip_norm"] = c.clip_norm;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kConfig, "train config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kTrainKeys.count(key)) fail(ErrorCode::kConfig, "train config: unknown key " + key);
  }
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.dropout = j.value("dropout", c.dropout);
    c.layers = j.value("layers", c.layers);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.memory_dim = j.value("memory_dim", c.memory_dim);
    c.heads = j.value("heads", c.heads);
    if (j.contains("tau")) c.tau = j["tau"].is_null() ? -1.0 : j["tau"].get<double>();
    c.keyframes = j.value("keyframes", c.keyframes);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    if (j.contains("task")) c.task = task_from_name(j["task"].get<std::string>());
    if (j.contains("model")) {
      const auto m = j["model"].get<std::string>();
      if (m == "temporal") {
        c.kind = ModelKind::kTemporal;
      } else if (m == "static") {
        c.kind = ModelKind::kStatic;
      } else {
        fail(ErrorCode::kConfig, "train config: model must be temporal or static");
      }
    }
    c.edges = j.value("edges", c.edges);
    c.pos_weight = j.value("pos_weight", c.pos_weight);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("train config: ") + e.what());
  }
  validate_train_config(c);
  return c;
}

DetectorConfig detector_config(const TrainConfig& c, std::uint32_t feat_dim) {
  DetectorConfig d;
  d.kind = c.kind;
  d.feat_dim = feat_dim;
  d.d_hidden = c.hidden_dim;
  d.d_memory = c.memory_dim == 0 ? c.hidden_dim : c.memory_dim;
  d.layers = c.layers;
  d.heads = c.heads;
  d.dropout = c.dropout;
  d.tau = c.tau;
  d.keyframes = c.keyframes;
  d.edges = c.edges;
  validate_config(d);
  return d;
}

SplitSpec default_split(std::size_t n) {
  SplitSpec s;
  s.val = n / 7;
  s.test = n / 7;
  s.train = n - s.val - s.test;
  s.seed = 42;
  return s;
}

Splits split_dataset(std::size_t n, const SplitSpec& spec) {
  if (spec.train < 1 || spec.val < 1 || spec.test < 1) {
    fail(ErrorCode::kConfig, "split counts must all be >= 1");
  }
  if (spec.train + spec.val + spec.test > n) {
    fail(ErrorCode::kConfig, "split counts " + std::to_string(spec.train) + "/" +
                                 std::to_string(spec.val) + "/" + std::to_string(spec.test) +
                                 " exceed the dataset size " + std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(idx);
  Splits s;
  auto it = idx.begin();
  s.train.assign(it, it + spec.train);
  it += spec.train;
  s.val.assign(it, it + spec.val);
  it += spec.val;
  s.test.assign(it, it + spec.test);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Example make_example(const DetectorConfig& cfg, const DenoisingTrace& trace,
                     const TraceLabel& label) {
  return {model_sequence(cfg, trace), label};
}

void adam_step(nn::ParamStore<float>& params, AdamState& st, double lr, double beta1,
               double beta2, double eps) {
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.emplace_back(p.size(), 0.0f);
      st.v.emplace_back(p.size(), 0.0f);
    }
  }
  if (st.m.size() != params.size()) fail(ErrorCode::kDimensionMismatch, "adam state does not match");
  ++st.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
  std::size_t t = 0;
  for (auto& p : params) {
    auto& m = st.m[t];
    auto& v = st.v[t];
    if (m.size() != p.size()) fail(ErrorCode::kDimensionMismatch, "adam state does not match");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = p.grad[k];
      const double mk = beta1 * m[k] + (1.0 - beta1) * g;
      const double vk = beta2 * v[k] + (1.0 - beta2) * g * g;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = lr * (mk / c1) / (std::sqrt(vk / c2) + eps);
      p.value[k] = static_cast<float>(p.value[k] - update);
    }
    ++t;
  }
}

double clip_grad_norm(nn::ParamStore<float>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (float g : p.grad) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& p : params) {
      for (auto& g : p.grad) g = static_cast<float>(g * scale);
    }
  }
  return norm;
}

Scores score_examples(const DetectorModel& model, const std::vector<Example>& data,
                      unsigned jobs) {
  std::vector<ForwardOutput<float>> outs(data.size());
  detail::parallel_for(data.size(), jobs,
                       [&](std::size_t i) { outs[i] = forward_trace(model, data[i].seq); });
  Scores s;
  const bool token_head = model.config.kind == ModelKind::kTemporal;
  for (std::size_t i = 0; i < data.size(); ++i) {
    s.response.push_back(outs[i].response_prob);
    s.response_labels.push_back(data[i].label.response_label);
    if (token_head && data[i].label.token_labels) {
      const auto& tl = *data[i].label.token_labels;
      if (tl.size() != outs[i].token_probs.size()) {
        fail(ErrorCode::kDimensionMismatch, "token labels do not match the response length");
      }
      for (std::size_t r = 0; r < tl.size(); ++r) {
        s.token.push_back(outs[i].token_probs[r]);
        s.token_labels.push_back(tl[r]);
      }
    }
  }
  return s;
}

double task_auroc(const Scores& s, Task task) {
  if (task == Task::kToken) return auroc(s.token, s.token_labels);
  return auroc(s.response, s.response_labels);
}

TrainResult train(const TrainConfig& cfg, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, unsigned jobs) {
  validate_train_config(cfg);
  if (train_set.empty()) fail(ErrorCode::kInvalidArgument, "training split is empty");
  if (val_set.empty()) fail(ErrorCode::kInvalidArgument, "validation split is empty");
  const DetectorConfig dcfg = detector_config(cfg, train_set.front().seq.feat_dim());
  TrainResult result;
  result.model = init_model(dcfg, mix_seed(cfg.seed, kInitStream));
  DetectorModel& model = result.model;
  const std::size_t width = model.params.num_values();
  const unsigned workers = std::max(1u, jobs);
  std::vector<nn::ParamStore<float>> scratch(workers, model.params);

  std::vector<std::vector<float>> best_values;
  double best = -1.0;
  std::uint32_t since_best = 0;
  AdamState adam;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<float>> grads;
  std::vector<double> losses;

  for (std::uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(cfg.seed, 0x100000000ULL + epoch);
    Rng shuffler(epoch_seed);
    shuffler.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      grads.assign(count, {});
      losses.assign(count, 0.0);
      // Worker w owns batch positions w, w + workers, ...
      auto run = [&](std::size_t w) {
        for (std::size_t b = w; b < count; b += workers) {
          const Example& ex = train_set[order[start + b]];
          auto& store = scratch[w];
          store.zero_grad();
          Rng drop(mix_seed(epoch_seed, start + b));
          ForwardOptions opt{true, &drop};
          double loss = sample_loss<float>(dcfg, model.layout, store, ex.seq, ex.label, cfg.task,
                                           opt, true);
          const double weight = ex.label.response_label == 1 ? cfg.pos_weight : 1.0;
          losses[b] = weight * loss;
          auto& g = grads[b];
          g.reserve(width);
          for (const auto& p : store) {
            for (float v : p.grad) g.push_back(static_cast<float>(weight * v));
          }
        }
      };
      detail::parallel_for(workers, workers, run);

      model.params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        if (!std::isfinite(losses[b])) {
          fail(ErrorCode::kNumeric, "non-finite loss at epoch " + std::to_string(epoch) +
                                        " on trace " + std::to_string(order[start + b]));
        }
        batch_loss += losses[b];
        std::size_t k = 0;
        for (auto& p : model.params) {
          for (auto& gv : p.grad) gv += grads[b][k++];
        }
      }
      const float inv = 1.0f / static_cast<float>(count);
      for (auto& p : model.params) {
        for (auto& gv : p.grad) gv *= inv;
      }
      epoch_loss += batch_loss;
      clip_grad_norm(model.params, cfg.clip_norm);
      adam_step(model.params, adam, cfg.lr);
      for (auto& s : scratch) {
        std::size_t t = 0;
        for (auto& p : s) p.value = model.params[t++].value;
      }
    }

    const double val = task_auroc(score_examples(model, val_set, jobs), cfg.task);
    result.history.push_back({epoch, epoch_loss / static_cast<double>(order.size()), val});
    if (val > best) {
      best = val;
      since_best = 0;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : model.params) best_values.push_back(p.value);
    } else if (++since_best > cfg.patience) {
      break;
    }
  }
  std::size_t t = 0;
  for (auto& p : model.params) {
    p.value = best_values[t++];
    std::fill(p.grad.begin(), p.grad.end(), 0.0f);
  }
  result.best_val_auroc = best;
  return result;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path);
  out << "epoch,train_loss,val_auroc\n";
  out.precision(17);
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.val_auroc << '\n';
}

SearchSpace search_space_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kConfig, "search space must be a JSON object");
  static const std::set<std::string> keys = {"lr",         "batch_size", "dropout",
                                             "layers",     "hidden_dim", "heads"};
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) fail(ErrorCode::kConfig, "search space: unknown key " + key);
  }
  SearchSpace s;
  try {
    s.lr = j.value("lr", s.lr);
    s.batch_size = j.value("batch_size", s.batch_size);
    s.dropout = j.value("dropout", s.dropout);
    s.layers = j.value("layers", s.layers);
    s.hidden_dim = j.value("hidden_dim", s.hidden_dim);
    s.heads = j.value("heads", s.heads);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("search space: ") + e.what());
  }
  if (s.lr.empty() || s.batch_size.empty() || s.dropout.empty() || s.layers.empty() ||
      s.hidden_dim.empty() || s.heads.empty()) {
    fail(ErrorCode::kConfig, "search space: every axis needs at least one value");
  }
  return s;
}

nlohmann::json search_space_to_json(const SearchSpace& s) {
  return {{"lr", s.lr},         {"batch_size", s.batch_size}, {"dropout", s.dropout},
          {"layers", s.layers}, {"hidden_dim", s.hidden_dim}, {"heads", s.heads}};
}

std::vector<TrainConfig> enumerate_space(const SearchSpace& space, const TrainConfig& base) {
  std::vector<TrainConfig> out;
  for (double lr : sorted_unique(space.lr)) {
    for (auto bs : sorted_unique(space.batch_size)) {
      for (double dr : sorted_unique(space.dropout)) {
        for (auto layers : sorted_unique(space.layers)) {
          for (auto hidden : sorted_unique(space.hidden_dim)) {
            for (auto heads : sorted_unique(space.heads)) {
              TrainConfig c = base;
              c.lr = lr;
              c.batch_size = bs;
              c.dropout = dr;
              c.layers = layers;
              c.hidden_dim = hidden;
              c.heads = heads;
              out.push_back(c);
            }
          }
        }
      }
    }
  }
  return out;
}

bool config_less(const TrainConfig& a, const TrainConfig& b) {
  return config_key(a) < config_key(b);
}

GridResult grid_search(const SearchSpace& space, const TrainConfig& base,
                       const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                       std::optional<std::size_t> budget, unsigned jobs) {
  if (budget && *budget < 1) fail(ErrorCode::kConfig, "grid search budget must be >= 1");
  auto configs = enumerate_space(space, base);
  GridResult result;
  result.enumerated = configs.size();
  if (configs.empty()) fail(ErrorCode::kConfig, "search space is empty");
  std::vector<std::size_t> chosen(configs.size());
  std::iota(chosen.begin(), chosen.end(), 0);
  if (budget && *budget < configs.size()) {
    Rng rng(mix_seed(base.seed, kSubsetStream));
    rng.shuffle(chosen);
    chosen.resize(*budget);
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<Trial> trials(chosen.size());
  detail::parallel_for(chosen.size(), jobs, [&](std::size_t i) {
    const auto& c = configs[chosen[i]];
    auto r = train(c, train_set, val_set, 1);
    trials[i] = {c, r.best_val_auroc, r.best_epoch};
  });
  std::stable_sort(trials.begin(), trials.end(), [](const Trial& a, const Trial& b) {
    if (a.val_auroc != b.val_auroc) return a.val_auroc > b.val_auroc;
    return config_less(a.config, b.config);
  });
  result.leaderboard = std::move(trials);
  return result;
}

nlohmann::json leaderboard_to_json(const GridResult& r) {
  nlohmann::json j;
  j["enumerated"] = r.enumerated;
  j["trained"] = r.leaderboard.size();
  j["leaderboard"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.leaderboard.size(); ++i) {
    const auto& t = r.leaderboard[i];
    j["leaderboard"].push_back({{"rank", i + 1},
                                {"val_auroc", t.val_auroc},
                                {"best_epoch", t.best_epoch},
                                {"config", train_config_to_json(t.config)}});
  }
  if (!r.leaderboard.empty()) j["best"] = train_config_to_json(r.leaderboard.front().config);
  return j;
}

}  // namespace tdg
