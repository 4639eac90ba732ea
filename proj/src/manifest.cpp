// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdg/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "tdg/error.hpp"

namespace tdg {

namespace fs = std::filesystem;
using nlohmann::json;

json manifest_entry_to_json(const ManifestEntry& e) {
  json j;
  j["trace"] = e.trace;
  j["label"] = e.label.response_label;
  if (e.label.token_labels) {
    j["token_labels"] = *e.label.token_labels;
  } else {
    j["token_labels"] = nullptr;
  }
  j["meta"] = e.meta;
  return j;
}

ManifestEntry manifest_entry_from_json(const json& j) {
  ManifestEntry e;
  try {
    e.trace = j.at("trace").get<std::string>();
    e.label.response_label = j.at("label").get<int>();
    if (j.contains("token_labels") && !j["token_labels"].is_null()) {
      e.label.token_labels = j["token_labels"].get<std::vector<int>>();
    }
    if (j.contains("meta")) e.meta = j["meta"];
  } catch (const json::exception& ex) {
    fail(ErrorCode::kConfig, std::string("malformed manifest record: ") + ex.what());
  }
  return e;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open manifest: " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      fail(ErrorCode::kConfig,
           path + ":" + std::to_string(lineno) + ": invalid JSON: " + ex.what());
    }
    out.push_back(manifest_entry_from_json(j));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path);
  for (const auto& e : entries) out << manifest_entry_to_json(e).dump() << '\n';
  if (!out) fail(ErrorCode::kIo, "failed writing manifest: " + path);
}

Dataset Dataset::open(const std::string& dir) {
  Dataset d;
  d.dir_ = dir;
  const fs::path manifest = fs::path(dir) / kManifestName;
  if (!fs::exists(manifest)) fail(ErrorCode::kIo, "no manifest at " + manifest.string());
  d.entries_ = read_manifest(manifest.string());
  if (d.entries_.empty()) fail(ErrorCode::kConfig, "empty manifest: " + manifest.string());
  return d;
}

std::string Dataset::trace_path(std::size_t i) const {
  return (fs::path(dir_) / entry(i).trace).string();
}

DenoisingTrace Dataset::load(std::size_t i) const { return load_trace(trace_path(i)); }

ValidationReport check_manifest_entry(const ManifestEntry& entry, const DenoisingTrace& trace) {
  ValidationReport report = validate_trace(trace, &entry.label);
  auto check = [&](const char* key, std::uint32_t actual) {
    if (entry.meta.contains(key)) {
      const auto declared = entry.meta[key].get<std::int64_t>();
      if (declared != static_cast<std::int64_t>(actual)) {
        report.push_back({std::string("manifest.") + key,
                          "manifest declares " + std::to_string(declared) +
                              " but blob header has " + std::to_string(actual)});
      }
    }
  };
  check("prompt_len", trace.prompt_len);
  check("resp_len", trace.resp_len);
  check("hidden_dim", trace.hidden_dim);
  return report;
}

}  // namespace tdg
