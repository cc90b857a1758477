#pragma once

#include "tkmx/hash.hpp"
#include "tkmx/vocabulary.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tkmx {

// Row-major float32 matrix whose rows follow the id order of the vocabulary
// identified by vocab_hash. The language-model head is its transpose; no
// separate head matrix is kept.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t rows, std::size_t dim, const Digest& vocab_hash);
    EmbeddingMatrix(std::size_t rows, std::size_t dim, const Digest& vocab_hash, std::vector<float> data);

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }
    const Digest& vocab_hash() const { return vocab_hash_; }
    const std::vector<float>& data() const { return data_; }

    std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
    std::span<float> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }

    bool aligned_with(const Vocabulary& vocab) const;

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    Digest vocab_hash_{};
    std::vector<float> data_;
};

// Binary layout, little-endian:
//   "TKMX" | u32 version=1 | u64 rows | u64 dim | 32-byte vocab hash |
//   rows*dim float32, row-major
std::string serialize_embeddings(const EmbeddingMatrix& emb);
EmbeddingMatrix parse_embeddings(std::string_view bytes);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path);

struct VipiReport {
    std::size_t inherited = 0;
    std::size_t averaged = 0;
    // Novel tokens that were not valid text for the original encoder and
    // were decomposed into base bytes instead.
    std::vector<TokenId> byte_fallback;
};

struct VipiResult {
    EmbeddingMatrix embeddings;
    VipiReport report;
};

// Tokens of `extended` that also exist in `original` (same bytes and role)
// take their original row verbatim. Every other token gets the mean of the
// original rows of its decomposition under the original tokenizer
// (accumulated in double, stored as float). Throws DataError when
// `original_emb` is not aligned with `original`.
VipiResult vipi_init(const Vocabulary& original, const EmbeddingMatrix& original_emb, const Vocabulary& extended,
                     std::size_t threads = 1);

// Decomposition used for a novel token: encode() of its text, or its base
// bytes when the token is not valid UTF-8.
std::vector<TokenId> vipi_decomposition(const Vocabulary& original, std::string_view token_bytes, bool& byte_fallback);

} // namespace tkmx
