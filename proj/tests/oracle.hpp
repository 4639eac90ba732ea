// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Straight-line reference forward pass of the temporal detector, written from
// the model definition with plain loops and looked-up parameter names. It
// shares no code with the library's layer implementations.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tdg/detector.hpp"

namespace tdg::testing {

struct OracleOutput {
  double response_prob = 0;
  std::vector<double> token_probs;
  std::vector<std::vector<double>> memory;  // [k] n x dm
};

class Oracle {
 public:
  Oracle(const DetectorConfig& cfg, const nn::ParamStore<double>& p) : cfg_(cfg), p_(p) {}

  OracleOutput run(const TemporalGraphSequence& seq) const {
    const std::size_t n = seq.num_nodes(), K = seq.snapshots.size();
    const std::size_t dh = cfg_.d_hidden, dm = cfg_.d_memory, H = cfg_.heads;
    OracleOutput out;
    std::vector<std::vector<double>> s(n, std::vector<double>(dm, 0.0));
    std::vector<std::vector<std::vector<double>>> S(n), Z(n);  // [i][k]
    for (std::size_t k = 0; k < K; ++k) {
      const auto& snap = seq.snapshots[k];
      std::vector<std::vector<double>> h(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(snap.feats(i).begin(), snap.feats(i).end());
        h[i] = affine("node_proj", x);
      }
      std::vector<std::vector<double>> sum(n, std::vector<double>(dh, 0.0));
      std::vector<int> deg(n, 0);
      for (const auto& e : snap.edges) {
        std::vector<double> in = h[e.src];
        in.insert(in.end(), h[e.dst].begin(), h[e.dst].end());
        in.push_back(e.weight);
        for (std::uint32_t l = 0; l < cfg_.layers; ++l) {
          in = affine("message." + std::to_string(l), in);
          if (l + 1 < cfg_.layers) {
            for (auto& v : in) v = std::max(0.0, v);
          }
        }
        for (std::size_t d = 0; d < dh; ++d) sum[e.dst][d] += in[d];
        ++deg[e.dst];
      }
      std::vector<double> mem_k;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> m(dh, 0.0);
        if (deg[i] > 0) {
          for (std::size_t d = 0; d < dh; ++d) m[d] = sum[i][d] / deg[i];
        }
        s[i] = gru(m, s[i]);
        S[i].push_back(s[i]);
        Z[i].push_back(affine("latent", s[i]));
        mem_k.insert(mem_k.end(), s[i].begin(), s[i].end());
      }
      out.memory.push_back(mem_k);
    }
    std::vector<std::vector<double>> zattn(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> cat;
      for (std::size_t hd = 0; hd < H; ++hd) {
        const auto& q = p_[p_.find("query." + std::to_string(hd))].value;
        std::vector<double> logits(K);
        double mx = -1e300;
        for (std::size_t k = 0; k < K; ++k) {
          logits[k] = 0;
          for (std::size_t d = 0; d < dm; ++d) logits[k] += q[d] * S[i][k][d];
          mx = std::max(mx, logits[k]);
        }
        double tot = 0;
        for (auto& v : logits) tot += (v = std::exp(v - mx));
        for (std::size_t d = 0; d < dm; ++d) {
          double acc = 0;
          for (std::size_t k = 0; k < K; ++k) acc += logits[k] / tot * Z[i][k][d];
          cat.push_back(acc);
        }
      }
      zattn[i] = H > 1 ? affine("head_proj", cat) : cat;
    }
    std::vector<double> g(dm, 0.0);
    std::size_t count = 0;
    for (std::size_t i = seq.prompt_len; i < n; ++i) {
      for (std::size_t d = 0; d < dm; ++d) g[d] += zattn[i][d];
      ++count;
      out.token_probs.push_back(sig(affine("f_token", zattn[i])[0]));
    }
    for (auto& v : g) v /= static_cast<double>(count);
    out.response_prob = sig(affine("f_seq", g)[0]);
    return out;
  }

 private:
  static double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  std::vector<double> affine(const std::string& name, const std::vector<double>& x,
                             bool bias = true) const {
    const auto& w = p_[p_.find(name + ".weight")];
    std::vector<double> y(w.rows, 0.0);
    for (std::size_t o = 0; o < w.rows; ++o) {
      for (std::size_t i = 0; i < w.cols; ++i) y[o] += w.value[o * w.cols + i] * x.at(i);
      if (bias) y[o] += p_[p_.find(name + ".bias")].value[o];
    }
    return y;
  }

  std::vector<double> gru(const std::vector<double>& x, const std::vector<double>& s) const {
    const auto az = add(affine("gru.wz", x), affine("gru.uz", s, false));
    const auto ar = add(affine("gru.wr", x), affine("gru.ur", s, false));
    std::vector<double> z(az.size()), r(ar.size()), rs(s.size());
    for (std::size_t d = 0; d < s.size(); ++d) {
      z[d] = sig(az[d]);
      r[d] = sig(ar[d]);
      rs[d] = r[d] * s[d];
    }
    const auto an = add(affine("gru.wh", x), affine("gru.uh", rs, false));
    std::vector<double> out(s.size());
    for (std::size_t d = 0; d < s.size(); ++d) {
      out[d] = (1.0 - z[d]) * s[d] + z[d] * std::tanh(an[d]);
    }
    return out;
  }

  static std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  }

  const DetectorConfig& cfg_;
  const nn::ParamStore<double>& p_;
};

}  // namespace tdg::testing
