#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

// Offsets exposed by the library count Unicode scalar values, not bytes.
namespace persum::utf8 {

// Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
std::string encode(char32_t c);

std::size_t length(std::string_view s);

// Codepoint range [start, end) of s. Throws std::out_of_range when end exceeds the length.
std::string substr(std::string_view s, std::size_t start, std::size_t end);

// Codepoint offset of the first occurrence of needle in haystack at or after from.
std::optional<std::size_t> find(std::u32string_view haystack, std::u32string_view needle,
                                std::size_t from = 0);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool is_space(char32_t c);

// Straight double quotes for curly double quotes, straight apostrophe for curly singles.
std::string normalize_quotes(std::string_view s);

// Collapses whitespace runs to one space and trims.
std::string collapse_whitespace(std::string_view s);

}  // namespace persum::utf8
