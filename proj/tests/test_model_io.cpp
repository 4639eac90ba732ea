// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "detector_checks.hpp"
#include "tdg/error.hpp"
#include "tdg/model_io.hpp"
#include "tdg/pipeline.hpp"
#include "tdg/synth.hpp"

namespace tdg {
namespace {

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_model(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

DetectorModel sample_model(ModelKind kind = ModelKind::kTemporal) {
  auto s = testing::make_small_model(testing::small_config(5, 6, 2, 2, kind), 3);
  return {s.cfg, s.layout, s.params.cast<float>()};
}

TEST(ModelIo, RoundTripIsExact) {
  for (ModelKind kind : {ModelKind::kTemporal, ModelKind::kStatic}) {
    const auto m = sample_model(kind);
    const nlohmann::json meta = {{"note", "x"}, {"seed", 4}};
    const auto bytes = encode_model(m, meta);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TDGM");
    nlohmann::json back_meta;
    const auto back = decode_model(bytes, &back_meta);
    EXPECT_EQ(back_meta, meta);
    EXPECT_EQ(config_to_json(back.config), config_to_json(m.config));
    ASSERT_EQ(back.params.size(), m.params.size());
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      EXPECT_EQ(back.params[i].name, m.params[i].name);
      EXPECT_EQ(back.params[i].value, m.params[i].value);
    }
    EXPECT_EQ(encode_model(back, meta), bytes);
  }
}

TEST(ModelIo, RejectsCorruptFiles) {
  const auto bytes = encode_model(sample_model());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(decode_error(bad), ErrorCode::kBadMagic);
  bad = bytes;
  bad[4] = 2;
  EXPECT_EQ(decode_error(bad), ErrorCode::kUnsupportedVersion);
  for (std::size_t len : {std::size_t{3}, std::size_t{8}, std::size_t{20}, bytes.size() - 1}) {
    EXPECT_EQ(decode_error({bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len)}),
              ErrorCode::kTruncated)
        << len;
  }
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(decode_error(bad), ErrorCode::kInvariant);
  bad = bytes;
  bad[10] = '!';  // inside the JSON header
  EXPECT_EQ(decode_error(bad), ErrorCode::kConfig);
  try {
    load_model("/nonexistent/model.tdgm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(ModelIo, FileRoundTrip) {
  const auto dir = testing::temp_dir("model_io");
  const auto m = sample_model();
  save_model(m, (dir / "m.tdgm").string(), {{"k", 1}});
  nlohmann::json meta;
  const auto back = load_model((dir / "m.tdgm").string(), &meta);
  EXPECT_EQ(meta["k"], 1);
  EXPECT_EQ(encode_model(back, meta), encode_model(m, meta));
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::filesystem::path(testing::temp_dir("pipeline"));
    SynthSpec spec;
    spec.prompt_len = 4;
    spec.resp_len = 6;
    spec.hidden_dim = 3;
    spec.steps = 8;
    spec.anchors = 2;
    spec.distractors = 2;
    spec.seed = 5;
    generate_dataset(spec, 70, dir_->string());
  }
  static void TearDownTestSuite() { delete dir_; }

  static TrainConfig config() {
    TrainConfig c;
    c.hidden_dim = 8;
    c.heads = 2;
    c.batch_size = 8;
    c.lr = 1e-2;
    c.max_epochs = 4;
    c.task = Task::kBoth;
    return c;
  }

  static std::filesystem::path* dir_;
};

std::filesystem::path* PipelineTest::dir_ = nullptr;

TEST_F(PipelineTest, CorpusSplitsFollowDefaultProtocol) {
  const auto c = load_corpus(dir_->string());
  EXPECT_EQ(c.traces.size(), 70u);
  EXPECT_EQ(c.splits.val.size(), 10u);
  EXPECT_EQ(c.splits.test.size(), 10u);
  EXPECT_EQ(c.splits.train.size(), 50u);
  EXPECT_EQ(&split_indices(c, "val"), &c.splits.val);
  EXPECT_THROW(split_indices(c, "holdout"), Error);
}

TEST_F(PipelineTest, TrainEvaluatePredictAblate) {
  const auto c = load_corpus(dir_->string(), std::nullopt, 2);
  const auto run = train_on_corpus(c, config(), 2);
  const auto split = model_split(run.meta);
  ASSERT_TRUE(split.has_value());
  EXPECT_EQ(split->seed, c.split_spec.seed);
  const auto tc = model_train_config(run.meta);
  ASSERT_TRUE(tc.has_value());
  EXPECT_EQ(train_config_to_json(*tc), train_config_to_json(config()));

  const auto& model = run.result.model;
  const auto r1 = evaluate_model(model, c, c.splits.test, "tdgnet", "test", 1);
  const auto r2 = evaluate_model(model, c, c.splits.test, "tdgnet", "test", 3);
  EXPECT_EQ(to_json(r1), to_json(r2));
  EXPECT_EQ(r1.n, 10u);
  EXPECT_EQ(r1.n_tokens, 60u);
  EXPECT_TRUE(r1.token_auroc.has_value());

  const auto p = predict_json(model, c.traces[0]);
  EXPECT_GE(p["response_prob"].get<double>(), 0.0);
  EXPECT_EQ(p["token_probs"].size(), 6u);

  const auto rep = ablate(c, model, config(), {"static", "no-graph", "token-baselines"}, 2);
  EXPECT_EQ(rep["model_auroc"].get<double>(), r1.response_auroc);
  EXPECT_EQ(rep["static"]["per_keyframe"].size(), 4u);
  EXPECT_EQ(rep["oracle_auroc"].get<double>(), 1.0);
  for (const char* k : {"degree", "source_attribution", "predictive_entropy", "tdgnet"}) {
    EXPECT_TRUE(rep["token_baselines"].contains(k)) << k;
  }
  EXPECT_TRUE(rep["no_graph"].contains("retrained_auroc"));
  EXPECT_EQ(ablate(c, model, config(), {"token-baselines"}, 1)["token_baselines"],
            rep["token_baselines"]);
  EXPECT_THROW(ablate(c, model, config(), {"layers"}), Error);
}

}  // namespace
}  // namespace tdg
