// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace sdr {

// Line-delimited JSON, UTF-8, one record per line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

std::string read_file(const std::filesystem::path& path);
// Writes via a temp file plus rename so a failed run leaves no partial file.
void write_file(const std::filesystem::path& path, const std::string& content);

} // namespace sdr
