#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace reroute::io {

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

nlohmann::json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; key order is nlohmann's sorted order,
// so identical values always serialize to identical bytes.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

// Checks the "schema" field and throws ValidationError on mismatch.
void expect_schema(const nlohmann::json& j, std::string_view schema);

// Fixed-precision decimal rendering used by every CSV/JSON emitter.
std::string fixed(double value, int digits = 6);

std::string hex64(std::uint64_t value);

}  // namespace reroute::io
