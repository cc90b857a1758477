#pragma once

#include "tkmx/pretokenizer.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tkmx {

using TokenId = std::uint32_t;

inline constexpr TokenId kNumBaseTokens = 256;

// Rank is the index in Vocabulary::merges(); the produced token id is
// always kNumBaseTokens + rank.
struct MergeRule {
    TokenId left = 0;
    TokenId right = 0;

    friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

using ByteOrder = std::array<std::uint8_t, kNumBaseTokens>;

ByteOrder identity_byte_order();

// Byte-level BPE vocabulary. Token layout is fixed:
//   [0, 256)                 single-byte base tokens (any permutation of 0..255)
//   [256, 256 + |merges|)    merge products, in rank order
//   [256 + |merges|, size)   special tokens
// Construction validates every structural invariant, so an existing
// Vocabulary object is always well-formed.
class Vocabulary {
public:
    Vocabulary();

    // Throws ParseError naming the offending merge/special index.
    Vocabulary(const ByteOrder& base_order,
               std::vector<MergeRule> merges,
               std::vector<std::string> specials,
               Pretokenizer pretokenizer);

    std::size_t size() const { return tokens_.size(); }
    std::size_t num_regular() const { return kNumBaseTokens + merges_.size(); }

    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<MergeRule>& merges() const { return merges_; }
    const std::vector<std::string>& specials() const { return specials_; }
    Pretokenizer pretokenizer() const { return pretokenizer_; }
    const ByteOrder& base_order() const { return base_order_; }

    const std::string& bytes(TokenId id) const;
    bool is_special(TokenId id) const { return id >= num_regular() && id < size(); }

    TokenId byte_token(std::uint8_t b) const { return byte_to_id_[b]; }
    std::optional<TokenId> find_regular(std::string_view bytes) const;
    std::optional<TokenId> find_special(std::string_view text) const;

    // Rank of the merge (left, right), if one exists.
    std::optional<std::uint32_t> merge_rank(TokenId left, TokenId right) const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b)
    {
        return a.base_order_ == b.base_order_ && a.merges_ == b.merges_ && a.specials_ == b.specials_ &&
               a.pretokenizer_ == b.pretokenizer_;
    }

private:
    ByteOrder base_order_{};
    std::array<TokenId, kNumBaseTokens> byte_to_id_{};
    std::vector<MergeRule> merges_;
    std::vector<std::string> specials_;
    Pretokenizer pretokenizer_ = Pretokenizer::gpt2;

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> regular_index_;
    std::unordered_map<std::string, TokenId> special_index_;
    std::unordered_map<std::uint64_t, std::uint32_t> merge_index_;

    void build();
};

inline std::uint64_t pair_key(TokenId left, TokenId right)
{
    return (static_cast<std::uint64_t>(left) << 32) | right;
}

} // namespace tkmx
