#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules. ASCII-oriented: multibyte
// sequences pass through untouched and act as token separators.
namespace physnote::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view s);

// Lowercased maximal runs of [A-Za-z0-9]; everything else separates.
std::vector<std::string> tokenize_lower(std::string_view s);

std::string replace_all(std::string s, std::string_view what, std::string_view with);

std::uint64_t fnv1a64(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace physnote::text
