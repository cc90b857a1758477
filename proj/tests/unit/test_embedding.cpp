#include "helpers.hpp"

#include "tkmx/embedding.hpp"
#include "tkmx/error.hpp"
#include "tkmx/vocab_extend.hpp"
#include "tkmx/vocab_io.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace tkmx;

namespace {

EmbeddingMatrix random_matrix(const Vocabulary& v, std::size_t dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> data(v.size() * dim);
    for (auto& x : data) {
        x = dist(rng);
    }
    return EmbeddingMatrix(v.size(), dim, vocab_hash(v), std::move(data));
}

struct Setup {
    Vocabulary base;
    Vocabulary extended;
};

Setup setup(std::uint64_t seed, const std::vector<std::string>& letters)
{
    std::mt19937_64 rng(seed);
    const auto a = testutil::SyntheticLanguage::make(rng, testutil::latin_letters(), 25, 100);
    const auto b = testutil::SyntheticLanguage::make(rng, letters, 25, 100);
    std::vector<std::string> base_docs, target;
    for (int i = 0; i < 40; ++i) {
        base_docs.push_back(a.text(rng, 60));
        target.push_back(b.text(rng, 60));
    }
    auto base = testutil::train_vocab(base_docs, 450, {"<|endoftext|>"});
    auto ext = extend(base, count_pretokens(target, base.pretokenizer()), ExtensionSpec{80, false}).vocab;
    return {std::move(base), std::move(ext)};
}

} // namespace

TEST_SUITE("embedding")
{
    TEST_CASE("binary layout and round trip")
    {
        const auto s = setup(1, testutil::latin_letters());
        const auto emb = random_matrix(s.base, 8, 1);
        const auto bytes = serialize_embeddings(emb);
        REQUIRE(bytes.size() == 4 + 4 + 8 + 8 + 32 + emb.rows() * 8 * 4);
        CHECK(bytes.substr(0, 4) == "TKMX");
        std::uint32_t version = 0;
        std::uint64_t rows = 0;
        std::memcpy(&version, bytes.data() + 4, 4);
        std::memcpy(&rows, bytes.data() + 8, 8);
        CHECK(version == 1);
        CHECK(rows == s.base.size());
        CHECK(parse_embeddings(bytes) == emb);
        CHECK(emb.aligned_with(s.base));
        CHECK_FALSE(emb.aligned_with(s.extended));

        testutil::TempDir dir;
        save_embeddings(emb, dir / "e.bin");
        CHECK(load_embeddings(dir / "e.bin") == emb);
    }

    TEST_CASE("format errors")
    {
        const auto s = setup(2, testutil::latin_letters());
        auto bytes = serialize_embeddings(random_matrix(s.base, 4, 2));
        auto bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(parse_embeddings(bad), FormatError);
        bad = bytes;
        bad[4] = 7;
        CHECK_THROWS_AS(parse_embeddings(bad), FormatError);
        CHECK_THROWS_AS(parse_embeddings(bytes.substr(0, bytes.size() - 1)), FormatError);
        CHECK_THROWS_AS(parse_embeddings(bytes + "x"), FormatError);
        CHECK_THROWS_AS(parse_embeddings("TK"), FormatError);
    }

    TEST_CASE("inherited rows are copied bit for bit, new rows are means")
    {
        const auto s = setup(3, testutil::latin_letters());
        const auto emb = random_matrix(s.base, 16, 3);
        const auto r = vipi_init(s.base, emb, s.extended);
        CHECK(r.embeddings.rows() == s.extended.size());
        CHECK(r.embeddings.vocab_hash() == vocab_hash(s.extended));
        CHECK(r.report.inherited + r.report.averaged == s.extended.size());
        CHECK(r.report.averaged == 80);
        for (TokenId id = 0; id < s.extended.size(); ++id) {
            const auto& bytes = s.extended.bytes(id);
            const auto orig = s.extended.is_special(id) ? s.base.find_special(bytes) : s.base.find_regular(bytes);
            const auto row = r.embeddings.row(id);
            if (orig) {
                CHECK(std::memcmp(row.data(), emb.row(*orig).data(), 16 * sizeof(float)) == 0);
                continue;
            }
            // Partial UTF-8 sequences are decomposed byte by byte.
            std::vector<TokenId> parts;
            if (unicode::is_valid_utf8(bytes)) {
                parts = encode(s.base, bytes);
            } else {
                for (unsigned char c : bytes) parts.push_back(s.base.byte_token(c));
            }
            REQUIRE(parts.size() >= 2);
            for (std::size_t d = 0; d < 16; ++d) {
                double sum = 0.0;
                for (auto p : parts) {
                    sum += emb.row(p)[d];
                }
                CHECK(std::abs(row[d] - sum / static_cast<double>(parts.size())) < 1e-6);
            }
        }
    }

    TEST_CASE("tokens that are not valid UTF-8 fall back to bytes")
    {
        // CJK text makes BPE merge partial UTF-8 sequences.
        const std::vector<std::string> cjk = {"中", "文", "字", "语", "言", "学", "习", "国"};
        const auto s = setup(4, cjk);
        const auto emb = random_matrix(s.base, 4, 4);
        const auto r = vipi_init(s.base, emb, s.extended);
        CHECK_FALSE(r.report.byte_fallback.empty());
        for (auto id : r.report.byte_fallback) {
            bool fallback = false;
            const auto parts = vipi_decomposition(s.base, s.extended.bytes(id), fallback);
            CHECK(fallback);
            CHECK(parts.size() == s.extended.bytes(id).size());
        }
    }

    TEST_CASE("thread count does not change the result")
    {
        const auto s = setup(5, testutil::latin_letters());
        const auto emb = random_matrix(s.base, 12, 5);
        CHECK(vipi_init(s.base, emb, s.extended, 1).embeddings == vipi_init(s.base, emb, s.extended, 3).embeddings);
    }

    TEST_CASE("misaligned input is rejected")
    {
        const auto s = setup(6, testutil::latin_letters());
        const auto wrong = random_matrix(s.extended, 4, 6);
        CHECK_THROWS_AS(vipi_init(s.base, wrong, s.extended), DataError);
    }
}
