#pragma once

#include "tkmx/vocabulary.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tkmx {

// Frequency table of pre-tokenized pieces. Counting is associative, so
// shards may be counted independently and merged in any order.
class PretokenCounter {
public:
    explicit PretokenCounter(Pretokenizer pretokenizer) : pretokenizer_(pretokenizer) {}

    void add_document(std::string_view text);
    void add_piece(std::string_view piece, std::uint64_t count = 1);
    void merge(const PretokenCounter& other);

    Pretokenizer pretokenizer() const { return pretokenizer_; }
    std::size_t documents() const { return documents_; }
    const std::unordered_map<std::string, std::uint64_t>& counts() const { return counts_; }

    // Pieces in byte-lexicographic order.
    std::vector<std::pair<std::string, std::uint64_t>> sorted() const;

private:
    Pretokenizer pretokenizer_;
    std::size_t documents_ = 0;
    std::unordered_map<std::string, std::uint64_t> counts_;
};

PretokenCounter count_pretokens(std::span<const std::string> docs, Pretokenizer pretokenizer,
                                std::size_t threads = 1);

struct TrainOptions {
    // Total vocabulary size including base bytes and specials.
    std::size_t target_size = kNumBaseTokens;
    std::vector<std::string> specials;
    std::uint64_t min_frequency = 2;
    // Id assignment of the 256 base tokens; identity when unset.
    std::optional<ByteOrder> base_order;
    // Called after every accepted merge with the new token's bytes. Returning
    // false ends training early; the merges so far are an exact prefix of
    // the full run.
    std::function<bool(std::string_view)> on_merge;
};

struct TrainResult {
    Vocabulary vocab;
    // True when training ran out of pairs with count >= min_frequency before
    // reaching target_size.
    bool exhausted = false;
    bool stopped_early = false;
};

// Pair selection: highest count, then lowest left id, then lowest right id.
// A pair whose concatenation already exists as a token is skipped.
TrainResult train(const PretokenCounter& counter, const TrainOptions& options);
TrainResult train(std::span<const std::string> docs, const TrainOptions& options, Pretokenizer pretokenizer,
                  std::size_t threads = 1);

// Applies merges in rank order to one pre-tokenized piece.
void encode_piece(const Vocabulary& vocab, std::string_view piece, std::vector<TokenId>& out);

std::vector<TokenId> encode(const Vocabulary& vocab, std::string_view text);

// Throws RangeError for unknown ids and DataError when the bytes are not
// valid UTF-8 and lossy is false.
std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids, bool lossy = false);

// Memoizes encode_piece per distinct piece. Not thread-safe; use one per
// worker.
class CachingEncoder {
public:
    explicit CachingEncoder(const Vocabulary& vocab, std::size_t max_entries = 1 << 20)
        : vocab_(&vocab), max_entries_(max_entries)
    {
    }

    void encode(std::string_view text, std::vector<TokenId>& out);
    std::vector<TokenId> encode(std::string_view text);
    std::size_t count(std::string_view text);

private:
    const Vocabulary* vocab_;
    std::size_t max_entries_;
    std::unordered_map<std::string, std::vector<TokenId>> cache_;
    std::vector<TokenId> scratch_;

    const std::vector<TokenId>& piece(std::string_view p);
};

} // namespace tkmx
