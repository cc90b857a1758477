#include "tkmx/embedding.hpp"

#include "tkmx/bpe.hpp"
#include "tkmx/error.hpp"
#include "tkmx/io.hpp"
#include "tkmx/unicode.hpp"
#include "tkmx/vocab_io.hpp"

#include <bit>
#include <cstring>
#include <thread>

namespace tkmx {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'K', 'M', 'X'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 8 + 32;

template <typename T>
void put(std::string& out, T value)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t offset)
{
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

} // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, const Digest& vocab_hash)
    : rows_(rows), dim_(dim), vocab_hash_(vocab_hash), data_(rows * dim, 0.0f)
{
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, const Digest& vocab_hash, std::vector<float> data)
    : rows_(rows), dim_(dim), vocab_hash_(vocab_hash), data_(std::move(data))
{
    if (data_.size() != rows_ * dim_) {
        throw FormatError("embedding payload has " + std::to_string(data_.size()) + " values, expected " +
                          std::to_string(rows_) + " x " + std::to_string(dim_));
    }
}

bool EmbeddingMatrix::aligned_with(const Vocabulary& vocab) const
{
    return rows_ == vocab.size() && vocab_hash_ == tkmx::vocab_hash(vocab);
}

std::string serialize_embeddings(const EmbeddingMatrix& emb)
{
    std::string out;
    out.reserve(kHeaderSize + emb.data().size() * sizeof(float));
    out.append(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, emb.rows());
    put<std::uint64_t>(out, emb.dim());
    out.append(reinterpret_cast<const char*>(emb.vocab_hash().data()), emb.vocab_hash().size());
    out.append(reinterpret_cast<const char*>(emb.data().data()), emb.data().size() * sizeof(float));
    return out;
}

EmbeddingMatrix parse_embeddings(std::string_view bytes)
{
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not an embedding file (bad magic)");
    }
    const auto version = get<std::uint32_t>(bytes, 4);
    if (version != kVersion) {
        throw FormatError("unsupported embedding file version " + std::to_string(version));
    }
    const auto rows = get<std::uint64_t>(bytes, 8);
    const auto dim = get<std::uint64_t>(bytes, 16);
    Digest hash{};
    std::memcpy(hash.data(), bytes.data() + 24, hash.size());
    const std::size_t payload = bytes.size() - kHeaderSize;
    if (dim != 0 && rows > payload / sizeof(float) / dim) {
        throw FormatError("header declares " + std::to_string(rows) + " x " + std::to_string(dim) +
                          " but the payload is " + std::to_string(payload) + " bytes");
    }
    if (payload != rows * dim * sizeof(float)) {
        throw FormatError("header declares " + std::to_string(rows) + " x " + std::to_string(dim) +
                          " but the payload is " + std::to_string(payload) + " bytes");
    }
    std::vector<float> data(rows * dim);
    std::memcpy(data.data(), bytes.data() + kHeaderSize, payload);
    return EmbeddingMatrix(rows, dim, hash, std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path)
{
    try {
        return parse_embeddings(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path)
{
    write_file(path, serialize_embeddings(emb));
}

std::vector<TokenId> vipi_decomposition(const Vocabulary& original, std::string_view token_bytes, bool& byte_fallback)
{
    byte_fallback = !unicode::is_valid_utf8(token_bytes);
    if (!byte_fallback) {
        return encode(original, token_bytes);
    }
    std::vector<TokenId> ids;
    for (unsigned char c : token_bytes) {
        ids.push_back(original.byte_token(c));
    }
    return ids;
}

VipiResult vipi_init(const Vocabulary& original, const EmbeddingMatrix& original_emb, const Vocabulary& extended,
                     std::size_t threads)
{
    if (!original_emb.aligned_with(original)) {
        throw DataError("embedding matrix is not aligned with the original vocabulary (hash or row count mismatch)");
    }
    const std::size_t dim = original_emb.dim();
    VipiResult result;
    result.embeddings = EmbeddingMatrix(extended.size(), dim, vocab_hash(extended));

    std::vector<TokenId> novel;
    for (TokenId id = 0; id < extended.size(); ++id) {
        const auto& bytes = extended.tokens()[id];
        const auto src = extended.is_special(id) ? original.find_special(bytes) : original.find_regular(bytes);
        if (src) {
            const auto in = original_emb.row(*src);
            std::copy(in.begin(), in.end(), result.embeddings.row(id).begin());
            ++result.report.inherited;
        } else {
            novel.push_back(id);
        }
    }
    result.report.averaged = novel.size();

    // Rows are independent; each worker writes a disjoint set of rows.
    std::vector<std::uint8_t> fallback(novel.size(), 0);
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<double> acc(dim);
        for (std::size_t i = begin; i < end; ++i) {
            bool byte_fallback = false;
            const auto parts = vipi_decomposition(original, extended.tokens()[novel[i]], byte_fallback);
            fallback[i] = byte_fallback ? 1 : 0;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (auto p : parts) {
                const auto r = original_emb.row(p);
                for (std::size_t d = 0; d < dim; ++d) {
                    acc[d] += r[d];
                }
            }
            auto out = result.embeddings.row(novel[i]);
            const double count = static_cast<double>(parts.size());
            for (std::size_t d = 0; d < dim; ++d) {
                out[d] = static_cast<float>(acc[d] / count);
            }
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, novel.size()));
    if (threads == 1) {
        work(0, novel.size());
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (novel.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(novel.size(), t * chunk);
            const std::size_t end = std::min(novel.size(), begin + chunk);
            workers.emplace_back(work, begin, end);
        }
        for (auto& w : workers) {
            w.join();
        }
    }
    for (std::size_t i = 0; i < novel.size(); ++i) {
        if (fallback[i]) {
            result.report.byte_fallback.push_back(novel[i]);
        }
    }
    return result;
}

} // namespace tkmx
