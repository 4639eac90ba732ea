// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tdg/trace.hpp"

namespace tdg {

inline constexpr const char* kManifestName = "manifest.jsonl";

// One JSON Lines record:
//   {"trace": <relative path>, "label": 0|1, "token_labels": [...] | null,
//    "meta": {...}}
struct ManifestEntry {
  std::string trace;
  TraceLabel label;
  nlohmann::json meta = nlohmann::json::object();
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

nlohmann::json manifest_entry_to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const nlohmann::json& j);

// A dataset directory: manifest.jsonl plus blobs referenced relative to it.
class Dataset {
 public:
  static Dataset open(const std::string& dir);

  std::size_t size() const { return entries_.size(); }
  const ManifestEntry& entry(std::size_t i) const { return entries_.at(i); }
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::string trace_path(std::size_t i) const;
  DenoisingTrace load(std::size_t i) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::vector<ManifestEntry> entries_;
};

// Checks declared meta sizes and label lengths against the blob header, and
// runs validate_trace on the blob.
ValidationReport check_manifest_entry(const ManifestEntry& entry, const DenoisingTrace& trace);

}  // namespace tdg
