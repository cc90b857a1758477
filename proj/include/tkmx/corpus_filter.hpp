#pragma once

#include "tkmx/document.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tkmx {

// Document-level counters satisfy
//   in_docs = out_docs + dropped_short + dropped_dup_doc + dropped_dup_para + dropped_frequent_para
// where the last two count documents emptied by paragraph removal.
struct FilterStats {
    std::uint64_t in_docs = 0;
    std::uint64_t out_docs = 0;
    std::uint64_t dropped_short = 0;
    std::uint64_t dropped_dup_doc = 0;
    std::uint64_t dropped_dup_para = 0;
    std::uint64_t dropped_frequent_para = 0;

    std::uint64_t paragraphs_seen = 0;
    std::uint64_t paragraphs_dropped_dup = 0;
    std::uint64_t paragraphs_dropped_frequent = 0;

    bool balanced() const
    {
        return in_docs == out_docs + dropped_short + dropped_dup_doc + dropped_dup_para + dropped_frequent_para;
    }
};

nlohmann::ordered_json to_json(const FilterStats& stats);

// Byte range [begin, end) of one paragraph. Paragraphs are maximal runs of
// non-blank lines; a line is blank when it holds only whitespace.
struct ParagraphSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<ParagraphSpan> split_paragraphs(std::string_view text);

// Deletes the paragraphs whose keep flag is false together with the separator
// that follows them. The result is a subsequence of the input.
std::string remove_paragraphs(std::string_view text, const std::vector<ParagraphSpan>& spans,
                              const std::vector<bool>& keep);

class LengthFilter {
public:
    explicit LengthFilter(std::size_t min_chars = 500) : min_chars_(min_chars) {}
    // Keeps documents with at least min_chars code points.
    bool keep(const DocumentRecord& doc) const;

private:
    std::size_t min_chars_;
};

// Keeps the first document of every NFC + whitespace-collapsed text.
class DocumentDeduplicator {
public:
    bool admit(const DocumentRecord& doc);

private:
    struct KeyHash {
        std::size_t operator()(const std::array<std::uint64_t, 2>& k) const { return k[0]; }
    };
    std::unordered_set<std::array<std::uint64_t, 2>, KeyHash> seen_;
};

struct ParagraphDedupOptions {
    std::size_t ngram = 13;
    // Store n-grams verbatim instead of as 64-bit hashes.
    bool exact = false;
};

// A paragraph is dropped when any of its whitespace-token n-grams was
// registered by an earlier retained paragraph; paragraphs shorter than n
// tokens are matched on their normalized text instead. Retained paragraphs
// register all their keys. Input order decides which copy survives.
class ParagraphDeduplicator {
public:
    explicit ParagraphDeduplicator(ParagraphDedupOptions options = {}) : options_(options) {}

    // Rewrites doc.text; returns false when every paragraph was dropped.
    bool process(DocumentRecord& doc, FilterStats& stats);

private:
    ParagraphDedupOptions options_;
    std::unordered_set<std::uint64_t> hashed_;
    std::unordered_set<std::string> exact_;

    bool seen(const std::string& key) const;
    void add(const std::string& key);
};

// Two-pass filter: count() every document, then apply() each one. Paragraphs
// whose normalized text occurs more than `threshold` times within the same
// subset are removed from every document of that subset.
class FrequentParagraphFilter {
public:
    explicit FrequentParagraphFilter(std::uint64_t threshold = 10) : threshold_(threshold) {}

    void count(const DocumentRecord& doc);
    bool apply(DocumentRecord& doc, FilterStats& stats) const;

private:
    std::uint64_t threshold_;
    std::unordered_map<std::string, std::unordered_map<std::uint64_t, std::uint64_t>> counts_;
};

// Vector conveniences for the streaming stages above.
std::vector<DocumentRecord> length_filter(std::vector<DocumentRecord> docs, std::size_t min_chars, FilterStats& stats);
std::vector<DocumentRecord> dedup_documents(std::vector<DocumentRecord> docs, FilterStats& stats);
std::vector<DocumentRecord> dedup_paragraphs(std::vector<DocumentRecord> docs, FilterStats& stats,
                                             ParagraphDedupOptions options = {});
std::vector<DocumentRecord> drop_frequent_paragraphs(std::vector<DocumentRecord> docs, std::uint64_t threshold,
                                                     FilterStats& stats);

struct FilterChainOptions {
    std::size_t min_chars = 500;
    std::uint64_t frequent_threshold = 10;
    ParagraphDedupOptions paragraph;
};

// frequent paragraphs -> document dedup -> n-gram paragraph dedup -> length.
// Length runs last so paragraph removal cannot leave short documents behind,
// which makes the chain idempotent.
std::vector<DocumentRecord> run_filter_chain(std::vector<DocumentRecord> docs, const FilterChainOptions& options,
                                             FilterStats& stats);

} // namespace tkmx
