#pragma once

#include "tkmx/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tkmx {

enum class LongDocPolicy { split, drop };

std::string to_string(LongDocPolicy p);
LongDocPolicy long_doc_policy_from_string(std::string_view s);

struct PackerConfig {
    std::size_t window = 4096;
    TokenId delimiter = 0;
    LongDocPolicy long_doc = LongDocPolicy::split;

    // Throws ConfigError when window < 2 or, given a vocabulary, when the
    // delimiter is not one of its specials.
    void validate() const;
    void validate(const Vocabulary& vocab) const;
};

struct TokenizedDocument {
    std::string id;
    std::vector<TokenId> ids;
};

// Half-open range of window positions holding (a chunk of) one document.
// `chunk` counts pieces of a split long document and is 0 otherwise.
struct DocSpan {
    std::string doc_id;
    std::size_t start = 0;
    std::size_t end = 0;
    std::uint32_t chunk = 0;

    friend bool operator==(const DocSpan&, const DocSpan&) = default;
};

// Layout: delim d1 delim d2 delim ... dk delim.
struct PackedWindow {
    std::vector<TokenId> ids;
    std::vector<DocSpan> spans;

    friend bool operator==(const PackedWindow&, const PackedWindow&) = default;
};

struct PackStats {
    std::uint64_t docs_in = 0;
    std::uint64_t docs_packed = 0;
    std::uint64_t docs_split = 0;
    std::uint64_t docs_dropped = 0;
    std::uint64_t windows = 0;
    std::uint64_t tokens = 0;
    std::uint64_t window_tokens = 0;

    double mean_fill(std::size_t window) const
    {
        return windows == 0 ? 0.0 : static_cast<double>(window_tokens) / (static_cast<double>(windows) * window);
    }
};

nlohmann::ordered_json to_json(const PackStats& stats);

// Next-fit packer. Documents are appended to the open window while
// 1 + sum(len + 1) <= window; otherwise the window is emitted and a new one
// opened. Documents longer than window - 2 close the open window and are
// either chunked into (window - 2)-token windows or dropped.
class Packer {
public:
    using Sink = std::function<void(PackedWindow&&)>;

    // `vocab_size` bounds valid token ids.
    Packer(PackerConfig config, std::size_t vocab_size, Sink sink);

    // Throws DataError for ids >= vocab_size or equal to the delimiter.
    void push(const TokenizedDocument& doc);
    void finish();

    const PackStats& stats() const { return stats_; }

private:
    PackerConfig config_;
    std::size_t vocab_size_;
    Sink sink_;
    PackedWindow open_;
    PackStats stats_;

    void reset_open();
    void emit();
};

std::vector<PackedWindow> pack(std::span<const TokenizedDocument> docs, const PackerConfig& config,
                               std::size_t vocab_size, PackStats* stats = nullptr);

// Splits one window back into its documents. Throws FormatError when the
// window does not start and end with the delimiter.
void unpack_window(std::span<const TokenId> ids, TokenId delimiter, std::vector<std::vector<TokenId>>& out);
std::vector<std::vector<TokenId>> unpack(std::span<const PackedWindow> windows, TokenId delimiter);

// Binary shard: "TKPK", u32 version, u32 window, then per window a u32
// length followed by that many u32 ids, all little-endian.
class ShardWriter {
public:
    ShardWriter(const std::filesystem::path& path, std::uint32_t window);
    void write(std::span<const TokenId> ids);
    void close();
    std::uint64_t windows() const { return windows_; }

private:
    std::ofstream out_;
    std::uint32_t window_;
    std::uint64_t windows_ = 0;
};

class ShardReader {
public:
    explicit ShardReader(const std::filesystem::path& path);
    std::uint32_t window() const { return window_; }
    // Returns false at end of file; throws FormatError on truncation.
    bool next(std::vector<TokenId>& ids);

private:
    std::ifstream in_;
    std::uint32_t window_ = 0;
};

std::vector<std::vector<TokenId>> read_shard(const std::filesystem::path& path, std::uint32_t* window = nullptr);

// One line per window: {"window": i, "spans": [{"doc_id", "start", "end", "chunk"}]}.
std::string spans_to_jsonl(std::size_t window_index, const PackedWindow& window);

} // namespace tkmx
