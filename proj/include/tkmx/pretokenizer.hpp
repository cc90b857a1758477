#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tkmx {

// Pre-tokenization patterns. Pieces never span two whitespace-delimited words:
// whitespace is only ever attached as a single leading character.
//
//   gpt2:  's|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+
//   qwen2: (?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}
//          | ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+
enum class Pretokenizer { gpt2, qwen2 };

std::string_view to_string(Pretokenizer p);
// Throws ConfigError for unknown identifiers.
Pretokenizer pretokenizer_from_string(std::string_view name);

// Splits text into pieces whose concatenation is exactly the input.
std::vector<std::string_view> pretokenize(Pretokenizer p, std::string_view text);

} // namespace tkmx
