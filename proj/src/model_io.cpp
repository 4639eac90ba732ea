// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tdg/error.hpp"

namespace tdg {

namespace {

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Cursor {
 public:
  explicit Cursor(const std::vector<std::uint8_t>& b) : b_(b) {}

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) {
      fail(ErrorCode::kTruncated, std::string("model truncated while reading ") + what);
    }
    const std::uint8_t* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint16_t u16(const char* what) {
    const auto* p = take(2, what);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    const auto* p = take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_model(const DetectorModel& model, const nlohmann::json& meta) {
  nlohmann::json header;
  header["config"] = config_to_json(model.config);
  header["params"] = nlohmann::json::array();
  for (const auto& p : model.params) {
    header["params"].push_back({{"name", p.name}, {"rows", p.rows}, {"cols", p.cols}});
  }
  header["meta"] = meta;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kModelMagic, kModelMagic + 4);
  put_u16(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : model.params) {
    for (float v : p.value) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

DetectorModel decode_model(const std::vector<std::uint8_t>& bytes, nlohmann::json* meta) {
  Cursor cur(bytes);
  const auto* magic = cur.take(4, "magic");
  if (std::memcmp(magic, kModelMagic, 4) != 0) fail(ErrorCode::kBadMagic, "not a TDGM model file");
  const std::uint16_t version = cur.u16("version");
  if (version != kModelVersion) {
    fail(ErrorCode::kUnsupportedVersion, "unsupported model version " + std::to_string(version));
  }
  const std::uint32_t len = cur.u32("header length");
  const auto* text = cur.take(len, "header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text, text + len);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("model header: ") + e.what());
  }
  if (!header.contains("config") || !header.contains("params")) {
    fail(ErrorCode::kConfig, "model header lacks config or params");
  }
  DetectorModel model = init_model(config_from_json(header["config"]), 0);
  const auto& listed = header["params"];
  if (!listed.is_array() || listed.size() != model.params.size()) {
    fail(ErrorCode::kDimensionMismatch, "model header parameter list does not match its config");
  }
  for (const auto& entry : listed) {
    const std::string name = entry.at("name").get<std::string>();
    auto& p = model.params[model.params.find(name)];
    if (entry.at("rows").get<std::size_t>() != p.rows ||
        entry.at("cols").get<std::size_t>() != p.cols) {
      fail(ErrorCode::kDimensionMismatch, "parameter " + name + " has the wrong shape");
    }
    for (auto& v : p.value) v = std::bit_cast<float>(cur.u32(name.c_str()));
  }
  if (!cur.done()) fail(ErrorCode::kInvariant, "trailing bytes after model payload");
  if (meta != nullptr) *meta = header.value("meta", nlohmann::json::object());
  return model;
}

void save_model(const DetectorModel& model, const std::string& path, const nlohmann::json& meta) {
  const auto bytes = encode_model(model, meta);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

DetectorModel load_model(const std::string& path, nlohmann::json* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open model: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_model(bytes, meta);
}

}  // namespace tdg
