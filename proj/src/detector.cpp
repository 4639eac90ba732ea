// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/detector.hpp"

#include <algorithm>

#include "detector_internal.hpp"
#include "tdg/error.hpp"

namespace tdg {

namespace detail {

std::vector<std::uint32_t> response_nodes(const GraphSnapshot& snap) {
  std::vector<std::uint32_t> out;
  const std::size_t f = snap.feat_dim;
  for (std::uint32_t i = 0; i < snap.num_nodes; ++i) {
    if (snap.node_feats[i * f + f - 1] == 0.0f) out.push_back(i);
  }
  if (out.empty()) fail(ErrorCode::kInvalidArgument, "graph has no response nodes");
  return out;
}

namespace {

template <class Real>
struct TemporalCache {
  std::vector<SnapshotCache<Real>> snaps;
  std::vector<std::vector<nn::GruCache<Real>>> gru;  // [k][i]
  std::vector<std::vector<Real>> s;                  // [k] n x dm
  std::vector<std::vector<Real>> s_node;             // [i] K x dm
  std::vector<std::vector<Real>> z_node;             // [i] K x dm
  std::vector<std::vector<Real>> concat;             // [i] H x dm
  std::vector<std::vector<Real>> zattn;              // [i] dm
  std::vector<Real> g, g_mask, g_used;
  std::vector<std::uint32_t> resp;
};

template <class Real>
ForwardOutput<Real> temporal_forward(const DetectorConfig& cfg, const DetectorLayout& L,
                                     const nn::ParamStore<Real>& P,
                                     const TemporalGraphSequence& seq, const ForwardOptions& opt,
                                     TemporalCache<Real>* cache) {
  if (seq.snapshots.empty()) fail(ErrorCode::kInvalidArgument, "empty graph sequence");
  const std::size_t K = seq.snapshots.size();
  const std::size_t n = seq.snapshots.front().num_nodes;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& s = seq.snapshots[k];
    if (s.feat_dim != cfg.feat_dim) {
      fail(ErrorCode::kDimensionMismatch, "node feature dim " + std::to_string(s.feat_dim) +
                                              " does not match model " +
                                              std::to_string(cfg.feat_dim));
    }
    if (s.num_nodes != n) fail(ErrorCode::kDimensionMismatch, "node count varies across snapshots");
    if (k > 0 && !(s.t < seq.snapshots[k - 1].t)) {
      fail(ErrorCode::kInvalidArgument, "snapshots must be in descending t");
    }
  }
  Rng* rng = (opt.train && cfg.dropout > 0.0) ? opt.dropout_rng : nullptr;
  if (opt.train && cfg.dropout > 0.0 && rng == nullptr) {
    fail(ErrorCode::kInvalidArgument, "training forward needs a dropout rng");
  }
  TemporalCache<Real> local;
  TemporalCache<Real>& c = cache ? *cache : local;
  const std::size_t dh = cfg.d_hidden, dm = cfg.d_memory, H = cfg.heads;

  ForwardOutput<Real> out;
  c.snaps.assign(K, {});
  c.gru.assign(K, std::vector<nn::GruCache<Real>>(n));
  c.s.assign(K, std::vector<Real>(n * dm, Real(0)));
  c.s_node.assign(n, std::vector<Real>(K * dm));
  c.z_node.assign(n, std::vector<Real>(K * dm));
  std::vector<Real> zero(dm, Real(0));
  for (std::size_t k = 0; k < K; ++k) {
    auto& sc = c.snaps[k];
    message_forward<Real>(P, L.w_node, L.message, seq.snapshots[k], cfg.dropout, rng, sc,
                          out.internals.message_calls);
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const Real> prev = k == 0 ? std::span<const Real>(zero)
                                          : std::span<const Real>(c.s[k - 1]).subspan(i * dm, dm);
      std::span<Real> next(c.s[k].data() + i * dm, dm);
      nn::gru_step<Real>(P, L.gru, std::span<const Real>(sc.mbar).subspan(i * dh, dh), prev, next,
                         &c.gru[k][i]);
      std::copy(next.begin(), next.end(), c.s_node[i].begin() + k * dm);
      nn::linear_forward<Real>(P, L.latent, next,
                               std::span<Real>(c.z_node[i]).subspan(k * dm, dm));
    }
  }
  out.internals.memory = c.s;

  out.internals.alpha.assign(n, std::vector<std::vector<Real>>(H, std::vector<Real>(K)));
  c.concat.assign(n, std::vector<Real>(H * dm));
  c.zattn.assign(n, std::vector<Real>(dm));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t h = 0; h < H; ++h) {
      nn::temporal_attention<Real>(P[L.queries[h]].value, c.s_node[i], c.z_node[i], K,
                                   out.internals.alpha[i][h],
                                   std::span<Real>(c.concat[i]).subspan(h * dm, dm));
    }
    if (H > 1) {
      nn::linear_forward<Real>(P, L.head_proj, c.concat[i], c.zattn[i]);
    } else {
      c.zattn[i] = c.concat[i];
    }
  }

  c.resp = response_nodes(seq.snapshots.front());
  std::vector<std::uint8_t> mask(n, 0);
  for (auto i : c.resp) mask[i] = 1;
  std::vector<Real> rows(n * dm);
  for (std::size_t i = 0; i < n; ++i) std::copy(c.zattn[i].begin(), c.zattn[i].end(), rows.begin() + i * dm);
  c.g.assign(dm, Real(0));
  nn::mean_pool<Real>(rows, dm, mask, c.g);
  c.g_mask.assign(dm, Real(1));
  if (rng != nullptr) nn::dropout_mask<Real>(c.g_mask, cfg.dropout, *rng);
  c.g_used.resize(dm);
  for (std::size_t d = 0; d < dm; ++d) c.g_used[d] = c.g[d] * c.g_mask[d];

  Real logit;
  nn::linear_forward<Real>(P, L.f_seq, c.g_used, std::span<Real>(&logit, 1));
  out.response_logit = logit;
  out.response_prob = static_cast<Real>(nn::sigmoid(static_cast<double>(logit)));
  out.response_nodes = c.resp;
  for (auto i : c.resp) {
    Real tl;
    nn::linear_forward<Real>(P, L.f_token, c.zattn[i], std::span<Real>(&tl, 1));
    out.token_logits.push_back(tl);
    out.token_probs.push_back(static_cast<Real>(nn::sigmoid(static_cast<double>(tl))));
  }
  return out;
}

template <class Real>
void temporal_backward(const DetectorConfig& cfg, const DetectorLayout& L, nn::ParamStore<Real>& P,
                       const TemporalGraphSequence& seq, const TemporalCache<Real>& c,
                       const ForwardOutput<Real>& fwd, Real dlogit,
                       std::span<const Real> dtoken) {
  const std::size_t K = seq.snapshots.size();
  const std::size_t n = seq.snapshots.front().num_nodes;
  const std::size_t dh = cfg.d_hidden, dm = cfg.d_memory, H = cfg.heads;

  std::vector<std::vector<Real>> dz(n, std::vector<Real>(dm, Real(0)));
  std::vector<Real> dg(dm, Real(0));
  nn::linear_backward<Real>(P, L.f_seq, c.g_used, std::span<const Real>(&dlogit, 1), dg);
  const Real inv = Real(1) / static_cast<Real>(c.resp.size());
  for (std::size_t d = 0; d < dm; ++d) dg[d] *= c.g_mask[d] * inv;
  for (std::size_t r = 0; r < c.resp.size(); ++r) {
    const auto i = c.resp[r];
    for (std::size_t d = 0; d < dm; ++d) dz[i][d] += dg[d];
    if (!dtoken.empty() && dtoken[r] != Real(0)) {
      nn::linear_backward<Real>(P, L.f_token, c.zattn[i], dtoken.subspan(r, 1), dz[i]);
    }
  }

  std::vector<std::vector<Real>> ds_node(n, std::vector<Real>(K * dm, Real(0)));
  std::vector<std::vector<Real>> dz_node(n, std::vector<Real>(K * dm, Real(0)));
  std::vector<Real> dconcat(H * dm);
  for (std::size_t i = 0; i < n; ++i) {
    if (H > 1) {
      std::fill(dconcat.begin(), dconcat.end(), Real(0));
      nn::linear_backward<Real>(P, L.head_proj, c.concat[i], dz[i], dconcat);
    } else {
      dconcat = dz[i];
    }
    for (std::size_t h = 0; h < H; ++h) {
      auto& q = P[L.queries[h]];
      nn::temporal_attention_backward<Real>(q.value, c.s_node[i], c.z_node[i], K,
                                            fwd.internals.alpha[i][h],
                                            std::span<const Real>(dconcat).subspan(h * dm, dm),
                                            q.grad, ds_node[i], dz_node[i]);
    }
  }

  std::vector<Real> carry(n * dm, Real(0)), carry_next(n * dm, Real(0));
  std::vector<Real> ds(dm), dmbar(n * dh);
  for (std::size_t k = K; k-- > 0;) {
    std::fill(dmbar.begin(), dmbar.end(), Real(0));
    std::fill(carry_next.begin(), carry_next.end(), Real(0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dm; ++d) ds[d] = ds_node[i][k * dm + d] + carry[i * dm + d];
      nn::linear_backward<Real>(P, L.latent, std::span<const Real>(c.s[k]).subspan(i * dm, dm),
                                std::span<const Real>(dz_node[i]).subspan(k * dm, dm), ds);
      nn::gru_backward<Real>(P, L.gru, c.gru[k][i], ds,
                             std::span<Real>(dmbar).subspan(i * dh, dh),
                             std::span<Real>(carry_next).subspan(i * dm, dm));
    }
    message_backward<Real>(P, L.w_node, L.message, seq.snapshots[k], c.snaps[k], dmbar, {});
    carry.swap(carry_next);
  }
}

}  // namespace
}  // namespace detail

const char* task_name(Task t) {
  switch (t) {
    case Task::kResponse: return "response";
    case Task::kToken: return "token";
    case Task::kBoth: return "both";
  }
  return "unknown";
}

Task task_from_name(const std::string& name) {
  if (name == "response") return Task::kResponse;
  if (name == "token") return Task::kToken;
  if (name == "both") return Task::kBoth;
  fail(ErrorCode::kInvalidArgument, "unknown task " + name + " (expected response|token|both)");
}

void validate_config(const DetectorConfig& c) {
  auto bad = [](const std::string& msg) { fail(ErrorCode::kConfig, "model config: " + msg); };
  if (c.feat_dim < 2) bad("feat_dim must be >= 2");
  if (c.d_hidden < 1) bad("d_hidden must be >= 1");
  if (c.d_memory < 1) bad("d_memory must be >= 1");
  if (c.layers < 1) bad("layers must be >= 1");
  if (c.heads < 1) bad("heads must be >= 1");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (!(c.tau < 1.0)) bad("tau must be < 1");
  for (std::size_t k = 1; k < c.keyframes.size(); ++k) {
    if (!(c.keyframes[k] < c.keyframes[k - 1])) bad("keyframes must be strictly descending");
  }
  if (c.kind == ModelKind::kStatic && c.keyframes.size() > 1) {
    bad("a static model takes at most one keyframe");
  }
}

nlohmann::json config_to_json(const DetectorConfig& c) {
  nlohmann::json j;
  j["kind"] = c.kind == ModelKind::kTemporal ? "temporal" : "static";
  j["feat_dim"] = c.feat_dim;
  j["d_hidden"] = c.d_hidden;
  j["d_memory"] = c.d_memory;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["dropout"] = c.dropout;
  j["tau"] = c.tau < 0.0 ? nlohmann::json(nullptr) : nlohmann::json(c.tau);
  j["keyframes"] = c.keyframes;
  j["edges"] = c.edges;
  return j;
}

DetectorConfig config_from_json(const nlohmann::json& j) {
  try {
    DetectorConfig c;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "temporal") {
      c.kind = ModelKind::kTemporal;
    } else if (kind == "static") {
      c.kind = ModelKind::kStatic;
    } else {
      fail(ErrorCode::kConfig, "unknown model kind " + kind);
    }
    c.feat_dim = j.at("feat_dim").get<std::uint32_t>();
    c.d_hidden = j.at("d_hidden").get<std::uint32_t>();
    c.d_memory = j.at("d_memory").get<std::uint32_t>();
    c.layers = j.at("layers").get<std::uint32_t>();
    c.heads = j.at("heads").get<std::uint32_t>();
    c.dropout = j.at("dropout").get<double>();
    c.tau = j.at("tau").is_null() ? -1.0 : j.at("tau").get<double>();
    c.keyframes = j.at("keyframes").get<std::vector<std::uint32_t>>();
    c.edges = j.value("edges", true);
    validate_config(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("model config: ") + e.what());
  }
}

DetectorModel init_model(const DetectorConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  DetectorModel m;
  m.config = cfg;
  Rng rng(seed);
  auto& L = m.layout;
  auto& P = m.params;
  L.w_node = nn::make_linear(P, "node_proj", cfg.feat_dim, cfg.d_hidden, true, rng);
  L.message = nn::make_mlp(P, "message", 2 * cfg.d_hidden + 1, cfg.d_hidden, cfg.d_hidden,
                           cfg.layers, rng);
  if (cfg.kind == ModelKind::kStatic) {
    detail::build_static_layout(cfg, L, P, rng);
    return m;
  }
  L.gru = nn::make_gru(P, "gru", cfg.d_hidden, cfg.d_memory, rng);
  L.latent = nn::make_linear(P, "latent", cfg.d_memory, cfg.d_memory, true, rng);
  for (std::uint32_t h = 0; h < cfg.heads; ++h) {
    const auto id = P.add("query." + std::to_string(h), cfg.d_memory, 1);
    nn::init_fan_uniform(P[id], cfg.d_memory, 1, rng);
    L.queries.push_back(id);
  }
  if (cfg.heads > 1) {
    L.head_proj = nn::make_linear(P, "head_proj", cfg.heads * cfg.d_memory, cfg.d_memory, true, rng);
  }
  L.f_seq = nn::make_linear(P, "f_seq", cfg.d_memory, 1, true, rng);
  L.f_token = nn::make_linear(P, "f_token", cfg.d_memory, 1, true, rng);
  return m;
}

double sequence_tau(const DetectorConfig& cfg, std::uint32_t prompt_len, std::uint32_t resp_len) {
  return cfg.tau < 0.0 ? default_tau(prompt_len, resp_len) : cfg.tau;
}

std::vector<std::uint32_t> sequence_keyframes(const DetectorConfig& cfg,
                                              const DenoisingTrace& trace) {
  if (!cfg.keyframes.empty()) return cfg.keyframes;
  if (trace.steps.empty()) fail(ErrorCode::kInvalidArgument, "trace has no steps");
  return default_keyframes(trace.steps.front().t);
}

TemporalGraphSequence model_sequence(const DetectorConfig& cfg, const DenoisingTrace& trace) {
  const auto kf = sequence_keyframes(cfg, trace);
  auto seq = build_sequence(trace, sequence_tau(cfg, trace.prompt_len, trace.resp_len), kf);
  return cfg.edges ? seq : strip_edges(seq);
}

template <class Real>
ForwardOutput<Real> forward(const DetectorConfig& cfg, const DetectorLayout& layout,
                            const nn::ParamStore<Real>& params, const TemporalGraphSequence& seq,
                            const ForwardOptions& opt) {
  if (cfg.kind == ModelKind::kStatic) {
    return detail::static_forward<Real>(cfg, layout, params, seq, opt, nullptr);
  }
  return detail::temporal_forward<Real>(cfg, layout, params, seq, opt, nullptr);
}

ForwardOutput<float> forward_trace(const DetectorModel& model, const TemporalGraphSequence& seq,
                                   const ForwardOptions& opt) {
  return forward<float>(model.config, model.layout, model.params, seq, opt);
}

ForwardOutput<float> no_graph_forward(const DetectorModel& model,
                                      const TemporalGraphSequence& seq) {
  return forward_trace(model, strip_edges(seq));
}

template <class Real>
double sample_loss(const DetectorConfig& cfg, const DetectorLayout& layout,
                   nn::ParamStore<Real>& params, const TemporalGraphSequence& seq,
                   const TraceLabel& label, Task task, const ForwardOptions& opt, bool backward) {
  const bool want_resp = task != Task::kToken;
  bool want_tok = task != Task::kResponse;
  if (want_tok && cfg.kind == ModelKind::kStatic) {
    fail(ErrorCode::kConfig, "static models have no token head");
  }
  if (want_tok && !label.token_labels) {
    if (task == Task::kToken) fail(ErrorCode::kInvalidArgument, "token task needs token labels");
    want_tok = false;
  }

  if (cfg.kind == ModelKind::kStatic) {
    detail::StaticCache<Real> cache;
    auto out = detail::static_forward<Real>(cfg, layout, params, seq, opt, &cache);
    const int h = label.response_label;
    const double loss = nn::bce_loss(static_cast<double>(out.response_prob), h);
    if (backward) {
      const Real dlogit = static_cast<Real>(nn::bce_logit_grad(out.response_logit, h));
      detail::static_backward<Real>(cfg, layout, params, seq, cache, dlogit);
    }
    return loss;
  }

  detail::TemporalCache<Real> cache;
  auto out = detail::temporal_forward<Real>(cfg, layout, params, seq, opt, &cache);
  double loss = 0.0;
  Real dlogit = 0;
  std::vector<Real> dtok;
  if (want_resp) {
    const int h = label.response_label;
    loss += nn::bce_loss(static_cast<double>(out.response_prob), h);
    dlogit = static_cast<Real>(nn::bce_logit_grad(out.response_logit, h));
  }
  if (want_tok) {
    const auto& tl = *label.token_labels;
    if (tl.size() != out.response_nodes.size()) {
      fail(ErrorCode::kDimensionMismatch, "token labels do not match the response length");
    }
    const double inv = 1.0 / static_cast<double>(tl.size());
    dtok.assign(tl.size(), Real(0));
    for (std::size_t r = 0; r < tl.size(); ++r) {
      loss += inv * nn::bce_loss(static_cast<double>(out.token_probs[r]), tl[r]);
      dtok[r] = static_cast<Real>(inv * nn::bce_logit_grad(out.token_logits[r], tl[r]));
    }
  }
  if (backward) {
    detail::temporal_backward<Real>(cfg, layout, params, seq, cache, out, dlogit, dtok);
  }
  return loss;
}

template ForwardOutput<float> forward<float>(const DetectorConfig&, const DetectorLayout&,
                                             const nn::ParamStore<float>&,
                                             const TemporalGraphSequence&, const ForwardOptions&);
template ForwardOutput<double> forward<double>(const DetectorConfig&, const DetectorLayout&,
                                               const nn::ParamStore<double>&,
                                               const TemporalGraphSequence&,
                                               const ForwardOptions&);
template double sample_loss<float>(const DetectorConfig&, const DetectorLayout&,
                                   nn::ParamStore<float>&, const TemporalGraphSequence&,
                                   const TraceLabel&, Task, const ForwardOptions&, bool);
template double sample_loss<double>(const DetectorConfig&, const DetectorLayout&,
                                    nn::ParamStore<double>&, const TemporalGraphSequence&,
                                    const TraceLabel&, Task, const ForwardOptions&, bool);

}  // namespace tdg
