#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace deltaspec {

using json = nlohmann::json;

std::string sha256_hex(std::string_view data);

/// 16 hex chars of SHA-256 over the parts joined with a 0x1f separator.
std::string stable_id(std::initializer_list<std::string_view> parts);

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename so readers never see partial files.
void write_text_file(const std::filesystem::path& path, std::string_view content);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

std::vector<json> read_jsonl_file(const std::filesystem::path& path);
void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& rows);

/// Numeric-aware comparison of dotted labels: "2" < "10", "3.2" < "3.10",
/// numeric components sort before alphabetic ones ("9" < "A.1").
bool dotted_less(std::string_view a, std::string_view b);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace deltaspec
