// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "tdg/error.hpp"
#include "tdg/graph.hpp"
#include "tdg/manifest.hpp"
#include "tdg/rng.hpp"

namespace tdg {

namespace {

constexpr const char* kClassNames[kNumClasses] = {
    "SelfCorrection", "StableFactual", "CorrectnessDecay", "SemanticDrift", "PersistentError"};

constexpr const char* kClassShort[kNumClasses] = {"SC", "SF", "CD", "SD", "PE"};

constexpr std::uint64_t kClassShuffleStream = 0xC1A55ULL;

std::vector<std::uint32_t> pick(Rng& rng, std::vector<std::uint32_t> pool, std::size_t k) {
  rng.shuffle(pool);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<double> dirichlet(Rng& rng, std::size_t k, double concentration) {
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& v : w) {
    v = rng.gamma(concentration);
    total += v;
  }
  if (total <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(k));
    return w;
  }
  for (auto& v : w) v /= total;
  return w;
}

std::size_t categorical(Rng& rng, const std::vector<double>& w) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (u < acc) return k;
  }
  return w.size() - 1;
}

}  // namespace

const char* class_name(DynamicsClass c) {
  const int i = static_cast<int>(c);
  if (i < 0 || i >= static_cast<int>(kNumClasses)) return "Unknown";
  return kClassNames[i];
}

DynamicsClass class_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (name == kClassNames[i] || name == kClassShort[i]) return static_cast<DynamicsClass>(i);
  }
  fail(ErrorCode::kInvalidArgument, "unknown dynamics class " + name);
}

int class_label(DynamicsClass c) {
  return (c == DynamicsClass::kSelfCorrection || c == DynamicsClass::kStableFactual) ? 0 : 1;
}

void validate_spec(const SynthSpec& s) {
  auto bad = [](const std::string& msg) { fail(ErrorCode::kConfig, "synth spec: " + msg); };
  if (s.prompt_len < 1 || s.resp_len < 1 || s.hidden_dim < 1 || s.steps < 1) {
    bad("prompt_len, resp_len, hidden_dim and steps must be positive");
  }
  if (s.anchors < 1 || s.anchors > s.prompt_len) bad("anchors must lie in [1, prompt_len]");
  if (s.distractors < 1 || s.focal_tokens < 1) bad("distractors and focal_tokens must be positive");
  if (s.distractors + s.focal_tokens > s.resp_len) {
    bad("distractors + focal_tokens must not exceed resp_len");
  }
  if (!(s.beta_low >= 0.0 && s.beta_low < s.beta_high && s.beta_high <= 1.0)) {
    bad("need 0 <= beta_low < beta_high <= 1");
  }
  if (!(s.sigma >= 0.0) || !std::isfinite(s.sigma)) bad("sigma must be finite and >= 0");
  if (!(s.background_concentration > 0.0)) bad("background_concentration must be > 0");
  double total = 0.0;
  for (double m : s.mix) {
    if (!(m >= 0.0)) bad("class mix entries must be >= 0");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) bad("class mix must sum to 1");
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kConfig, "synth spec must be a JSON object");
  static const char* keys[] = {"prompt_len", "resp_len",     "steps",  "hidden_dim",
                               "anchors",    "distractors",  "beta_high", "beta_low",
                               "sigma",      "mix",          "seed",   "focal_tokens",
                               "background_concentration", "all_steps"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(keys), std::end(keys), [&](const char* k) { return key == k; }) ==
        std::end(keys)) {
      fail(ErrorCode::kConfig, "synth spec: unknown key " + key);
    }
  }
  SynthSpec s;
  try {
    s.prompt_len = j.value("prompt_len", s.prompt_len);
    s.resp_len = j.value("resp_len", s.resp_len);
    s.steps = j.value("steps", s.steps);
    s.hidden_dim = j.value("hidden_dim", s.hidden_dim);
    s.anchors = j.value("anchors", s.anchors);
    s.distractors = j.value("distractors", s.distractors);
    s.beta_high = j.value("beta_high", s.beta_high);
    s.beta_low = j.value("beta_low", s.beta_low);
    s.sigma = j.value("sigma", s.sigma);
    s.seed = j.value("seed", s.seed);
    s.focal_tokens = j.value("focal_tokens", s.focal_tokens);
    s.background_concentration = j.value("background_concentration", s.background_concentration);
    s.all_steps = j.value("all_steps", s.all_steps);
    if (j.contains("mix")) {
      if (!j["mix"].is_object()) fail(ErrorCode::kConfig, "synth spec: mix must be an object");
      s.mix.fill(0.0);
      for (const auto& [name, w] : j["mix"].items()) {
        DynamicsClass c;
        try {
          c = class_from_name(name);
        } catch (const Error&) {
          fail(ErrorCode::kConfig, "synth spec: unknown class " + name + " in mix");
        }
        s.mix[static_cast<std::size_t>(c)] = w.get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("synth spec: ") + e.what());
  }
  validate_spec(s);
  return s;
}

nlohmann::json synth_spec_to_json(const SynthSpec& s) {
  nlohmann::json mix;
  for (std::size_t c = 0; c < kNumClasses; ++c) mix[kClassNames[c]] = s.mix[c];
  return {{"prompt_len", s.prompt_len},
          {"resp_len", s.resp_len},
          {"steps", s.steps},
          {"hidden_dim", s.hidden_dim},
          {"anchors", s.anchors},
          {"distractors", s.distractors},
          {"beta_high", s.beta_high},
          {"beta_low", s.beta_low},
          {"sigma", s.sigma},
          {"mix", mix},
          {"seed", s.seed},
          {"focal_tokens", s.focal_tokens},
          {"background_concentration", s.background_concentration},
          {"all_steps", s.all_steps}};
}

SynthSample generate_trace(DynamicsClass cls, const SynthSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  const std::uint32_t P = spec.prompt_len, R = spec.resp_len, D = spec.hidden_dim;
  const std::uint32_t N = P + R, T = spec.steps;
  const double lo = spec.beta_low, hi = spec.beta_high;
  const double mid = 0.5 * (lo + hi);
  Rng rng(seed);

  std::vector<std::uint32_t> prompt_ids(P), resp_ids(R);
  std::iota(prompt_ids.begin(), prompt_ids.end(), 0u);
  std::iota(resp_ids.begin(), resp_ids.end(), P);

  LatentRecord lat;
  lat.cls = cls;
  lat.anchors = pick(rng, prompt_ids, spec.anchors);

  // Background levels, drawn before anything class-specific.
  std::vector<double> levels;
  if (cls == DynamicsClass::kSelfCorrection || cls == DynamicsClass::kCorrectnessDecay) {
    levels = {lo, lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo), hi};
  } else if (cls != DynamicsClass::kStableFactual) {
    levels = {lo, hi};
  }
  std::vector<double> background(R, hi);
  if (!levels.empty()) {
    const auto w = dirichlet(rng, levels.size(), spec.background_concentration);
    for (auto& b : background) b = levels[categorical(rng, w)];
  }

  std::vector<std::uint32_t> order = resp_ids;
  rng.shuffle(order);
  std::vector<std::uint32_t> focal(order.begin(), order.begin() + spec.focal_tokens);
  std::vector<std::uint32_t> distract(order.begin() + spec.focal_tokens,
                                      order.begin() + spec.focal_tokens + spec.distractors);
  std::sort(focal.begin(), focal.end());
  std::sort(distract.begin(), distract.end());
  lat.distractors = distract;
  if (cls != DynamicsClass::kStableFactual) lat.focal = focal;

  if (spec.all_steps) {
    for (std::uint32_t t = T + 1; t-- > 0;) lat.times.push_back(t);
  } else {
    lat.times = default_keyframes(T);
  }
  const std::size_t K = lat.times.size();
  const std::uint32_t drift_period = (T + 3) / 4;

  lat.beta.assign(R, std::vector<double>(K, hi));
  lat.targets.assign(R, std::vector<std::vector<std::uint32_t>>(K, lat.anchors));
  for (std::uint32_t r = 0; r < R; ++r) {
    const std::uint32_t node = P + r;
    const bool is_focal = std::binary_search(lat.focal.begin(), lat.focal.end(), node);
    for (std::size_t k = 0; k < K; ++k) {
      const std::uint32_t t = lat.times[k];
      const double progress = static_cast<double>(T - t) / static_cast<double>(T);
      double& beta = lat.beta[r][k];
      auto& target = lat.targets[r][k];
      if (!is_focal) {
        beta = background[r];
        continue;
      }
      switch (cls) {
        case DynamicsClass::kSelfCorrection:
          beta = lo + (hi - lo) * progress;
          break;
        case DynamicsClass::kCorrectnessDecay:
          beta = hi - (hi - lo) * progress;
          break;
        case DynamicsClass::kPersistentError:
          beta = hi;
          target = distract;
          break;
        case DynamicsClass::kSemanticDrift:
          beta = hi;
          target = {distract[((T - t) / drift_period) % distract.size()]};
          break;
        case DynamicsClass::kStableFactual:
          break;
      }
    }
  }

  SynthSample out;
  out.trace.prompt_len = P;
  out.trace.resp_len = R;
  out.trace.hidden_dim = D;
  out.trace.has_entropy = true;
  const double log_vocab = std::log(32.0);
  std::vector<double> row(N);
  for (std::size_t k = 0; k < K; ++k) {
    StepRecord step;
    step.t = lat.times[k];
    step.attention.assign(std::size_t{N} * N, 0.0f);
    step.hidden.assign(std::size_t{N} * D, 0.0f);
    step.entropy.assign(N, 0.0f);
    for (std::uint32_t i = 0; i < N; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      double beta = 0.0;
      if (i < P) {
        for (std::uint32_t j = 0; j < P; ++j) row[j] = 1.0 / P;
      } else {
        const std::uint32_t r = i - P;
        beta = lat.beta[r][k];
        const auto& target = lat.targets[r][k];
        const double rest = (1.0 - beta) / static_cast<double>(N - target.size());
        std::fill(row.begin(), row.end(), rest);
        for (std::uint32_t j : target) row[j] = beta / static_cast<double>(target.size());
      }
      if (spec.sigma > 0.0) {
        std::vector<double> noisy(row);
        double total = 0.0;
        for (auto& v : noisy) {
          v *= std::max(0.0, 1.0 + spec.sigma * rng.normal());
          total += v;
        }
        if (total > 0.0) {
          for (std::uint32_t j = 0; j < N; ++j) row[j] = noisy[j] / total;
        }
      }
      float* arow = step.attention.data() + std::size_t{i} * N;
      for (std::uint32_t j = 0; j < N; ++j) arow[j] = static_cast<float>(row[j]);

      float* h = step.hidden.data() + std::size_t{i} * D;
      if (i >= P) h[0] = static_cast<float>(std::abs(beta - mid));
      if (spec.sigma > 0.0) {
        for (std::uint32_t d = 0; d < D; ++d) {
          h[d] = static_cast<float>(h[d] + spec.sigma * rng.normal());
        }
      }
      if (i >= P) step.entropy[i] = static_cast<float>(std::max(0.0, 1.0 - beta) * log_vocab);
    }
    out.trace.steps.push_back(std::move(step));
  }

  out.label.response_label = class_label(cls);
  std::vector<int> tokens(R, 0);
  if (out.label.response_label == 1) {
    for (std::uint32_t node : lat.focal) tokens[node - P] = 1;
  }
  out.label.token_labels = std::move(tokens);
  out.latent = std::move(lat);
  return out;
}

std::array<std::size_t, kNumClasses> class_counts(const SynthSpec& spec, std::size_t n) {
  std::array<std::size_t, kNumClasses> counts{};
  std::array<double, kNumClasses> rem{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double exact = spec.mix[c] * static_cast<double>(n);
    counts[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  std::array<std::size_t, kNumClasses> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % kNumClasses]];
  return counts;
}

std::uint64_t trace_seed(const SynthSpec& spec, std::size_t index) {
  return mix_seed(spec.seed, index);
}

std::string generate_dataset(const SynthSpec& spec, std::size_t n_traces,
                             const std::string& out_dir) {
  validate_spec(spec);
  if (n_traces < 1) fail(ErrorCode::kInvalidArgument, "generate_dataset: n_traces must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "traces", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir + ": " + ec.message());

  const auto counts = class_counts(spec, n_traces);
  std::vector<DynamicsClass> classes;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    classes.insert(classes.end(), counts[c], static_cast<DynamicsClass>(c));
  }
  Rng rng(mix_seed(spec.seed, kClassShuffleStream));
  rng.shuffle(classes);

  std::vector<ManifestEntry> entries;
  entries.reserve(n_traces);
  for (std::size_t i = 0; i < n_traces; ++i) {
    const std::uint64_t seed = trace_seed(spec, i);
    const auto sample = generate_trace(classes[i], spec, seed);
    char name[32];
    std::snprintf(name, sizeof name, "traces/%06zu.tdgt", i);
    save_trace(sample.trace, (fs::path(out_dir) / name).string());
    ManifestEntry e;
    e.trace = name;
    e.label = sample.label;
    e.meta = {{"prompt_len", spec.prompt_len},
              {"resp_len", spec.resp_len},
              {"hidden_dim", spec.hidden_dim},
              {"steps", spec.steps},
              {"class", class_name(classes[i])},
              {"seed", seed},
              {"oracle", oracle_score(sample.latent)}};
    entries.push_back(std::move(e));
  }
  const std::string manifest = (fs::path(out_dir) / kManifestName).string();
  write_manifest(manifest, entries);
  return manifest;
}

double oracle_score(const LatentRecord& lat) {
  const std::size_t R = lat.beta.size();
  if (R == 0 || lat.times.empty()) return 0.0;
  auto on_response = [&](const std::vector<std::uint32_t>& targets) {
    for (std::uint32_t j : targets) {
      if (std::find(lat.distractors.begin(), lat.distractors.end(), j) != lat.distractors.end()) {
        return true;
      }
    }
    return false;
  };
  for (std::size_t r = 0; r < R; ++r) {
    const auto& b = lat.beta[r];
    if (on_response(lat.targets[r].back())) return 1.0;
    if (b.back() < b.front() - 1e-12) return 1.0;
  }
  return 0.0;
}

}  // namespace tdg
