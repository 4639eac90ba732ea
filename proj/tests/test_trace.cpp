// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "tdg/error.hpp"
#include "tdg/manifest.hpp"
#include "tdg/trace.hpp"
#include "test_util.hpp"

namespace tdg {
namespace {

using testing::random_shape;
using testing::random_trace;
using testing::TraceShape;

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_trace(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

bool has_violation(const ValidationReport& r, const std::string& id) {
  for (const auto& v : r) {
    if (v.invariant == id) return true;
  }
  return false;
}

TEST(TraceBlob, RoundTripIsExact) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto tr = random_trace(random_shape(rng), rng);
    EXPECT_EQ(decode_trace(encode_trace(tr)), tr);
  }
}

TEST(TraceBlob, HeaderLayout) {
  Rng rng(1);
  TraceShape s;
  s.entropy = true;
  s.token_ids = false;
  const auto tr = random_trace(s, rng);
  const auto b = encode_trace(tr);
  ASSERT_GE(b.size(), 24u);
  EXPECT_EQ(std::memcmp(b.data(), "TDGT", 4), 0);
  EXPECT_EQ(b[4] | (b[5] << 8), 1);
  EXPECT_EQ(b[6] | (b[7] << 8), 1);  // entropy flag only
  auto u32 = [&](std::size_t off) {
    return std::uint32_t(b[off]) | std::uint32_t(b[off + 1]) << 8 |
           std::uint32_t(b[off + 2]) << 16 | std::uint32_t(b[off + 3]) << 24;
  };
  EXPECT_EQ(u32(8), s.prompt_len);
  EXPECT_EQ(u32(12), s.resp_len);
  EXPECT_EQ(u32(16), s.times.size());
  EXPECT_EQ(u32(20), s.hidden_dim);
  EXPECT_EQ(u32(24), s.times.front());
  const std::size_t n = s.prompt_len + s.resp_len;
  const std::size_t per_step = 4 + 4 * (n * n + n * s.hidden_dim + n);
  EXPECT_EQ(b.size(), 24 + per_step * s.times.size());
}

TEST(TraceBlob, BadMagic) {
  Rng rng(2);
  auto b = encode_trace(random_trace(TraceShape{}, rng));
  b[0] = 'X';
  EXPECT_EQ(decode_error(b), ErrorCode::kBadMagic);
}

TEST(TraceBlob, UnsupportedVersionAndFlags) {
  Rng rng(3);
  auto b = encode_trace(random_trace(TraceShape{}, rng));
  auto v = b;
  v[4] = 2;
  EXPECT_EQ(decode_error(v), ErrorCode::kUnsupportedVersion);
  auto f = b;
  f[6] = 0x80;
  EXPECT_EQ(decode_error(f), ErrorCode::kUnsupportedVersion);
}

TEST(TraceBlob, TruncationAnywhere) {
  Rng rng(4);
  const auto b = encode_trace(random_trace(TraceShape{}, rng));
  for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{10}, std::size_t{23},
                          std::size_t{30}, b.size() - 1}) {
    std::vector<std::uint8_t> cut(b.begin(), b.begin() + len);
    EXPECT_EQ(decode_error(cut), ErrorCode::kTruncated) << "len " << len;
  }
}

TEST(TraceBlob, TrailingBytesRejected) {
  Rng rng(5);
  auto b = encode_trace(random_trace(TraceShape{}, rng));
  b.push_back(0);
  EXPECT_EQ(decode_error(b), ErrorCode::kInvariant);
}

TEST(TraceBlob, WriteRefusesInvalidTrace) {
  Rng rng(6);
  auto tr = random_trace(TraceShape{}, rng);
  tr.steps[0].attention[0] += 0.5f;
  try {
    encode_trace(tr);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvariant);
  }
}

TEST(TraceBlob, FileRoundTrip) {
  const auto dir = testing::temp_dir("trace_file");
  Rng rng(8);
  const auto tr = random_trace(TraceShape{}, rng);
  const auto path = (dir / "a.tdgt").string();
  save_trace(tr, path);
  EXPECT_EQ(load_trace(path), tr);
  try {
    load_trace((dir / "missing.tdgt").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(TraceValidation, RandomTracesAreValid) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE(validate_trace(random_trace(random_shape(rng), rng)).empty());
  }
}

TEST(TraceValidation, Mutations) {
  Rng rng(10);
  const auto base = random_trace(TraceShape{}, rng);
  const std::uint32_t n = base.num_nodes();

  auto row = base;
  row.steps[1].attention[2] += 0.01f;
  EXPECT_TRUE(has_violation(validate_trace(row), "attention.row_sum"));

  auto neg = base;
  neg.steps[0].attention[0] = -0.1f;
  neg.steps[0].attention[1] += 0.1f;
  EXPECT_TRUE(has_violation(validate_trace(neg), "attention.range"));

  auto order = base;
  std::swap(order.steps[0].t, order.steps[1].t);
  EXPECT_TRUE(has_violation(validate_trace(order), "steps.descending_t"));

  auto dup = base;
  dup.steps[1].t = dup.steps[0].t;
  EXPECT_TRUE(has_violation(validate_trace(dup), "steps.descending_t"));

  auto shape = base;
  shape.steps[0].attention.pop_back();
  EXPECT_TRUE(has_violation(validate_trace(shape), "attention.shape"));

  auto hidden = base;
  hidden.steps[0].hidden.resize(n * base.hidden_dim + 1);
  EXPECT_TRUE(has_violation(validate_trace(hidden), "hidden.shape"));

  auto nan = base;
  nan.steps[0].hidden[0] = std::nanf("");
  EXPECT_TRUE(has_violation(validate_trace(nan), "hidden.finite"));

  auto ent = base;
  ent.steps[0].entropy.assign(n, 1.0f);
  EXPECT_TRUE(has_violation(validate_trace(ent), "entropy.flag"));

  auto empty = base;
  empty.steps.clear();
  EXPECT_TRUE(has_violation(validate_trace(empty), "steps.nonempty"));

  TraceLabel bad_label{2, std::nullopt};
  EXPECT_TRUE(has_violation(validate_trace(base, &bad_label), "label.binary"));
  TraceLabel short_tokens{1, std::vector<int>(base.resp_len - 1, 0)};
  EXPECT_TRUE(has_violation(validate_trace(base, &short_tokens), "label.token_length"));
  TraceLabel bad_tokens{1, std::vector<int>(base.resp_len, 3)};
  EXPECT_TRUE(has_violation(validate_trace(base, &bad_tokens), "label.token_binary"));
}

TEST(Manifest, RoundTripAndChecks) {
  const auto dir = testing::temp_dir("manifest");
  Rng rng(11);
  const auto tr = random_trace(TraceShape{}, rng);
  save_trace(tr, (dir / "t0.tdgt").string());
  ManifestEntry e;
  e.trace = "t0.tdgt";
  e.label = {1, std::vector<int>(tr.resp_len, 0)};
  e.meta = {{"prompt_len", tr.prompt_len}, {"resp_len", tr.resp_len}, {"hidden_dim", 99}};
  ManifestEntry e2{"t0.tdgt", {0, std::nullopt}, nlohmann::json::object()};
  write_manifest((dir / kManifestName).string(), {e, e2});

  const auto ds = Dataset::open(dir.string());
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.entry(0).label, e.label);
  EXPECT_EQ(ds.entry(0).meta, e.meta);
  EXPECT_FALSE(ds.entry(1).label.token_labels.has_value());
  EXPECT_EQ(ds.load(0), tr);

  const auto report = check_manifest_entry(ds.entry(0), tr);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].invariant, "manifest.hidden_dim");
  EXPECT_TRUE(check_manifest_entry(ds.entry(1), tr).empty());
}

TEST(Manifest, MalformedLines) {
  const auto dir = testing::temp_dir("manifest_bad");
  {
    std::ofstream out(dir / kManifestName);
    out << "{\"trace\": \"a\", \"label\": 0}\n\n{not json}\n";
  }
  try {
    Dataset::open(dir.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
  {
    std::ofstream out(dir / kManifestName);
    out << "{\"label\": 0}\n";
  }
  EXPECT_THROW(Dataset::open(dir.string()), Error);
}

}  // namespace
}  // namespace tdg
