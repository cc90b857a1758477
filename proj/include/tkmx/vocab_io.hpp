#pragma once

#include "tkmx/hash.hpp"
#include "tkmx/vocabulary.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tkmx {

// Vocab file (UTF-8 JSON, single line):
//   {"version":1,"pretokenizer":"gpt2","specials":[...],
//    "tokens":[base64 bytes in id order],"merges":[[left,right],...]}
// `tokens` lists every id, specials included.
std::string serialize_vocab(const Vocabulary& vocab);
Vocabulary parse_vocab(std::string_view text);

Vocabulary load_vocab(const std::filesystem::path& path);
void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);

// SHA-256 of serialize_vocab(); identifies the vocabulary an embedding
// matrix is aligned with.
Digest vocab_hash(const Vocabulary& vocab);

struct ImportResult {
    Vocabulary vocab;
    // Entry count declared by the source files (ranks, or vocab.json entries).
    std::size_t declared = 0;
    // Tokens whose id differs from the id in the source file.
    std::size_t renumbered = 0;
    // Tokens whose merge could not be recovered by replaying lower ranks and
    // was taken from the best available two-way split instead.
    std::size_t split_fallbacks = 0;
};

// tiktoken rank file: one "<base64 bytes> <rank>" per line. Ranks double as
// ids; merges are recovered by replaying rank-ordered BPE on each token.
ImportResult import_tiktoken(const std::filesystem::path& path, std::vector<std::string> specials,
                             Pretokenizer pretokenizer);

// Hugging Face byte-level vocab.json + merges.txt. Entries of vocab.json that
// are neither base bytes nor merge products are kept as specials in id order.
ImportResult import_hf(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt,
                       std::vector<std::string> extra_specials, Pretokenizer pretokenizer);

} // namespace tkmx
