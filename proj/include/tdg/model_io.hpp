// Copyright (c) 2026 The tdg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Model file (little-endian):
//   "TDGM" | u16 version=1 | u32 header length | JSON header | f32 payloads
// The header lists {"config", "params": [{"name", "rows", "cols"}], "meta"};
// payloads follow in header order.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdg/detector.hpp"

namespace tdg {

inline constexpr char kModelMagic[4] = {'T', 'D', 'G', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

std::vector<std::uint8_t> encode_model(const DetectorModel& model,
                                       const nlohmann::json& meta = nlohmann::json::object());

// Rebuilds the layout from the stored config and fills parameters by name.
DetectorModel decode_model(const std::vector<std::uint8_t>& bytes,
                           nlohmann::json* meta = nullptr);

void save_model(const DetectorModel& model, const std::string& path,
                const nlohmann::json& meta = nlohmann::json::object());
DetectorModel load_model(const std::string& path, nlohmann::json* meta = nullptr);

}  // namespace tdg
