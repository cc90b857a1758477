#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tkmx::unicode {

// Decodes the code point starting at s[pos] and advances pos. Returns -1 and
// advances by one byte when the sequence is not well-formed UTF-8.
std::int32_t next_code_point(std::string_view s, std::size_t& pos);

void append_utf8(std::string& out, std::int32_t cp);

bool is_valid_utf8(std::string_view s);

// Replaces every ill-formed sequence with U+FFFD.
std::string to_valid_utf8(std::string_view s);

std::size_t code_point_count(std::string_view s);

// Character classes matching the regex classes \p{L}, \p{N} and \s.
bool is_letter(std::int32_t cp);
bool is_number(std::int32_t cp);
bool is_whitespace(std::int32_t cp);

// True for letters whose script is neither Latin nor script-neutral
// (Common / Inherited).
bool is_non_latin_letter(std::int32_t cp);

std::string nfc(std::string_view s);

// Collapses every run of Unicode whitespace to one ASCII space and trims.
std::string collapse_whitespace(std::string_view s);

// NFC followed by whitespace collapse; the key used for exact-match dedup.
std::string normalize_for_dedup(std::string_view s);

// Maximal runs of non-whitespace characters.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::size_t count_words(std::string_view s);

} // namespace tkmx::unicode
