#include "tkmx/vocabulary.hpp"

#include "tkmx/error.hpp"

#include <numeric>

namespace tkmx {

ByteOrder identity_byte_order()
{
    ByteOrder order{};
    std::iota(order.begin(), order.end(), std::uint8_t{0});
    return order;
}

Vocabulary::Vocabulary() : Vocabulary(identity_byte_order(), {}, {}, Pretokenizer::gpt2) {}

Vocabulary::Vocabulary(const ByteOrder& base_order,
                       std::vector<MergeRule> merges,
                       std::vector<std::string> specials,
                       Pretokenizer pretokenizer)
    : base_order_(base_order),
      merges_(std::move(merges)),
      specials_(std::move(specials)),
      pretokenizer_(pretokenizer)
{
    build();
}

void Vocabulary::build()
{
    std::array<bool, kNumBaseTokens> seen{};
    tokens_.clear();
    tokens_.reserve(kNumBaseTokens + merges_.size() + specials_.size());
    for (TokenId id = 0; id < kNumBaseTokens; ++id) {
        const auto b = base_order_[id];
        if (seen[b]) {
            throw ParseError("base token " + std::to_string(id) + " repeats byte " + std::to_string(b));
        }
        seen[b] = true;
        byte_to_id_[b] = id;
        tokens_.emplace_back(1, static_cast<char>(b));
    }

    regular_index_.clear();
    regular_index_.reserve(kNumBaseTokens + merges_.size());
    for (TokenId id = 0; id < kNumBaseTokens; ++id) {
        regular_index_.emplace(tokens_[id], id);
    }
    merge_index_.clear();
    merge_index_.reserve(merges_.size());
    for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
        const auto produced = static_cast<TokenId>(kNumBaseTokens + rank);
        const auto& m = merges_[rank];
        if (m.left >= produced || m.right >= produced) {
            throw ParseError("merge " + std::to_string(rank) + " references undefined token (" +
                             std::to_string(m.left) + ", " + std::to_string(m.right) + ")");
        }
        std::string bytes = tokens_[m.left] + tokens_[m.right];
        if (!regular_index_.emplace(bytes, produced).second) {
            throw ParseError("merge " + std::to_string(rank) + " duplicates the bytes of token " +
                             std::to_string(regular_index_.at(bytes)));
        }
        if (!merge_index_.emplace(pair_key(m.left, m.right), static_cast<std::uint32_t>(rank)).second) {
            throw ParseError("merge " + std::to_string(rank) + " repeats an earlier pair");
        }
        tokens_.push_back(std::move(bytes));
    }

    special_index_.clear();
    for (std::size_t i = 0; i < specials_.size(); ++i) {
        if (specials_[i].empty()) {
            throw ParseError("special token " + std::to_string(i) + " is empty");
        }
        const auto id = static_cast<TokenId>(tokens_.size());
        if (!special_index_.emplace(specials_[i], id).second) {
            throw ParseError("special token " + std::to_string(i) + " is a duplicate");
        }
        tokens_.push_back(specials_[i]);
    }
}

const std::string& Vocabulary::bytes(TokenId id) const
{
    if (id >= tokens_.size()) {
        throw RangeError("token id " + std::to_string(id) + " out of range (vocabulary size " +
                         std::to_string(tokens_.size()) + ")");
    }
    return tokens_[id];
}

std::optional<TokenId> Vocabulary::find_regular(std::string_view bytes) const
{
    const auto it = regular_index_.find(std::string(bytes));
    if (it == regular_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<TokenId> Vocabulary::find_special(std::string_view text) const
{
    const auto it = special_index_.find(std::string(text));
    if (it == special_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::uint32_t> Vocabulary::merge_rank(TokenId left, TokenId right) const
{
    const auto it = merge_index_.find(pair_key(left, right));
    if (it == merge_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

} // namespace tkmx
