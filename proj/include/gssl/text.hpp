#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gssl::text {

// Lowercase (ASCII), trim, and collapse inner whitespace runs to one space.
std::string normalize_label(std::string_view s);

std::string trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep,
                 std::size_t begin = 0, std::size_t end = static_cast<std::size_t>(-1));

// 64-bit FNV-1a, used for provenance hashes.
std::uint64_t fnv1a(std::string_view s);

std::string hex64(std::uint64_t v);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

}  // namespace gssl::text
