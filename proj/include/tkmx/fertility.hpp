#pragma once

#include "tkmx/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tkmx {

enum class FertilityMode {
    // total tokens / total words
    corpus,
    // mean of per-document ratios over documents with at least one word
    document,
};

struct FertilityCounts {
    std::uint64_t tokens = 0;
    std::uint64_t words = 0;
    std::uint64_t documents = 0;
    // Per-document ratio sum, documents with words only.
    double ratio_sum = 0.0;
    std::uint64_t ratio_documents = 0;

    // Throws DataError when there are no words to divide by.
    double value(FertilityMode mode = FertilityMode::corpus) const;
};

// Encodes every document without special tokens. Words are maximal runs of
// non-whitespace code points. The result does not depend on `threads`.
FertilityCounts count_fertility(const Vocabulary& vocab, std::span<const std::string> docs, std::size_t threads = 1);

double fertility(const Vocabulary& vocab, std::span<const std::string> docs,
                 FertilityMode mode = FertilityMode::corpus, std::size_t threads = 1);

// (adapted - base) / base * 100, unrounded.
double relative_change(double base, double adapted);

// "hu" -> "Hungarian"; unknown codes are returned unchanged.
std::string language_name(const std::string& code);

struct FertilityRow {
    std::string lang;
    double base = 0.0;
    double adapted = 0.0;

    double change() const { return relative_change(base, adapted); }
};

struct FertilityReport {
    std::string base_name = "base";
    std::string adapted_name = "adapted";
    FertilityMode mode = FertilityMode::corpus;
    std::vector<FertilityRow> rows;

    nlohmann::ordered_json to_json() const;
    // Columns: Language, <base_name>, <adapted_name>, Change (%). Fertility
    // to 4 decimals, change to 2, both rounded half away from zero.
    std::string to_table() const;
};

FertilityReport compare(const Vocabulary& base, const Vocabulary& adapted,
                        const std::map<std::string, std::vector<std::string>>& docs_by_lang,
                        FertilityMode mode = FertilityMode::corpus, std::size_t threads = 1);

} // namespace tkmx
