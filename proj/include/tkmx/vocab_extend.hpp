#pragma once

#include "tkmx/bpe.hpp"
#include "tkmx/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tkmx {

struct NonLatinFilterResult {
    Vocabulary vocab;
    // Bytes of every removed token, in original id order.
    std::vector<std::string> removed;
};

// Drops every regular token of two or more bytes that contains a letter of a
// script other than Latin (Common and Inherited letters are neutral; digits,
// punctuation, symbols, whitespace and ill-formed byte runs never trigger
// removal). Base bytes and specials are always kept. A merge survives only if
// both operands and its product survive, so dropping an operand drops the
// product too. Surviving tokens keep their relative order.
NonLatinFilterResult filter_non_latin(const Vocabulary& vocab);

bool is_non_latin_token(std::string_view bytes);

struct ExtensionSpec {
    std::size_t n = 32000;
    bool latin_filter = true;
};

struct ExtensionReport {
    std::size_t original_size = 0;
    // Size of the vocabulary the extension starts from (after filtering).
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t removed_non_latin = 0;
    // Index of the n-th novel token of the freshly trained vocabulary; absent
    // when n = 0.
    std::optional<std::size_t> k;
    std::vector<TokenId> novel_tokens;
    // Merges of inherited tokens that had to be re-derived from a two-way
    // split because their original operands were missing.
    std::size_t rederived_merges = 0;
    std::size_t final_size = 0;
};

nlohmann::ordered_json to_json(const ExtensionReport& report);

struct ExtensionResult {
    Vocabulary vocab;
    ExtensionReport report;
};

// Extends `original` with n tokens learned from `corpus`:
//   train V' of size m + n on the corpus (same pre-tokenizer and base byte
//   order as the original, no specials); let k be the index of the n-th token
//   of V' absent from the original; the result is V'[:k+1] followed by every
//   original token not in V'[:k+1], in original order.
// The result has exactly m + n tokens. Throws ExtensionError when the corpus
// yields fewer than n novel tokens.
ExtensionResult extend(const Vocabulary& original, const PretokenCounter& corpus, const ExtensionSpec& spec);

// Independently re-checks the postconditions of extend(): size identity,
// novelty count, that everything after the last novel token is an original
// token in original order. Throws AuditError listing offending tokens.
ExtensionReport audit(const Vocabulary& original, const Vocabulary& extended,
                      std::optional<std::size_t> expected_n = std::nullopt);

} // namespace tkmx
