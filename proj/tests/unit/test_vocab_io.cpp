#include "helpers.hpp"

#include "tkmx/error.hpp"
#include "tkmx/hash.hpp"
#include "tkmx/io.hpp"
#include "tkmx/vocab_io.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>

using namespace tkmx;

namespace {

Vocabulary sample_vocab(std::uint64_t seed, const ByteOrder& order, std::size_t size = 420)
{
    std::mt19937_64 rng(seed);
    const auto lang = testutil::SyntheticLanguage::make(rng, testutil::latin_letters(), 30, 150);
    std::vector<std::string> docs;
    for (int i = 0; i < 40; ++i) {
        docs.push_back(lang.text(rng, 80));
    }
    TrainOptions opts;
    opts.target_size = size;
    opts.base_order = order;
    opts.specials = {"<|endoftext|>", "<|im_start|>"};
    return train(docs, opts, Pretokenizer::qwen2).vocab;
}

// GPT-2 byte-to-unicode table, written out independently of the library.
std::vector<std::string> gpt2_byte_table(ByteOrder& order)
{
    std::vector<int> bs;
    for (int b = '!'; b <= '~'; ++b) bs.push_back(b);
    for (int b = 0xA1; b <= 0xAC; ++b) bs.push_back(b);
    for (int b = 0xAE; b <= 0xFF; ++b) bs.push_back(b);
    std::vector<int> cs = bs;
    int extra = 0;
    for (int b = 0; b < 256; ++b) {
        if (std::find(bs.begin(), bs.end(), b) == bs.end()) {
            bs.push_back(b);
            cs.push_back(256 + extra++);
        }
    }
    std::vector<std::string> table(256);
    for (std::size_t i = 0; i < 256; ++i) {
        order[i] = static_cast<std::uint8_t>(bs[i]);
        unicode::append_utf8(table[static_cast<std::size_t>(bs[i])], cs[i]);
    }
    return table;
}

} // namespace

TEST_SUITE("vocab_io")
{
    TEST_CASE("serialize/parse round trip")
    {
        std::mt19937_64 rng(1);
        const auto v = sample_vocab(1, testutil::shuffled_order(rng));
        const auto text = serialize_vocab(v);
        CHECK(text.back() == '\n');
        CHECK(std::count(text.begin(), text.end(), '\n') == 1);
        const auto back = parse_vocab(text);
        CHECK(back == v);
        CHECK(back.tokens() == v.tokens());
        CHECK(serialize_vocab(back) == text);
        CHECK(vocab_hash(back) == vocab_hash(v));
        CHECK(vocab_hash(v) == sha256(text));
    }

    TEST_CASE("save and load")
    {
        testutil::TempDir dir;
        const auto v = sample_vocab(2, identity_byte_order());
        save_vocab(v, dir / "sub" / "v.json");
        CHECK(load_vocab(dir / "sub" / "v.json") == v);
        CHECK_THROWS_AS(load_vocab(dir / "missing.json"), Error);
    }

    TEST_CASE("malformed files name the offending entry")
    {
        const auto v = sample_vocab(3, identity_byte_order(), 300);
        const auto good = nlohmann::json::parse(serialize_vocab(v));

        CHECK_THROWS_AS(parse_vocab("not json"), ParseError);
        CHECK_THROWS_AS(parse_vocab("[1,2]"), ParseError);

        auto bad = good;
        bad["version"] = 2;
        CHECK_THROWS_WITH_AS(parse_vocab(bad.dump()), doctest::Contains("version"), ParseError);

        bad = good;
        bad["merges"][5] = {1, 9999};
        CHECK_THROWS_WITH_AS(parse_vocab(bad.dump()), doctest::Contains("merge 5"), ParseError);

        bad = good;
        bad["tokens"][260] = "!!!";
        CHECK_THROWS_WITH_AS(parse_vocab(bad.dump()), doctest::Contains("token 260"), ParseError);

        bad = good;
        bad["tokens"][270] = base64_encode("zzz-not-the-merge");
        CHECK_THROWS_WITH_AS(parse_vocab(bad.dump()), doctest::Contains("token 270"), ParseError);

        bad = good;
        bad["tokens"].erase(bad["tokens"].size() - 1);
        CHECK_THROWS_AS(parse_vocab(bad.dump()), ParseError);

        bad = good;
        bad["pretokenizer"] = "whitespace";
        CHECK_THROWS_AS(parse_vocab(bad.dump()), Error);
    }

    TEST_CASE("tiktoken import recovers the vocabulary")
    {
        testutil::TempDir dir;
        std::mt19937_64 rng(4);
        const auto v = sample_vocab(4, testutil::shuffled_order(rng), 700);
        {
            std::ofstream out(dir / "v.tiktoken");
            for (TokenId id = 0; id < v.num_regular(); ++id) {
                out << base64_encode(v.bytes(id)) << ' ' << id << '\n';
            }
        }
        const auto r = import_tiktoken(dir / "v.tiktoken", v.specials(), Pretokenizer::qwen2);
        CHECK(r.declared == v.num_regular());
        CHECK(r.renumbered == 0);
        CHECK(r.vocab.tokens() == v.tokens());
        CHECK(r.vocab.base_order() == v.base_order());
        // Replaying lower ranks reproduces a trained vocabulary's merges.
        CHECK(r.split_fallbacks == 0);
        CHECK(r.vocab == v);
    }

    TEST_CASE("tiktoken import rejects gaps and junk")
    {
        testutil::TempDir dir;
        {
            std::ofstream out(dir / "bad.tiktoken");
            for (int b = 0; b < 256; ++b) {
                out << base64_encode(std::string(1, static_cast<char>(b))) << ' ' << b << '\n';
            }
            out << base64_encode("ab") << " 300\n";
        }
        CHECK_THROWS_AS(import_tiktoken(dir / "bad.tiktoken", {}, Pretokenizer::qwen2), ParseError);
        {
            std::ofstream out(dir / "junk.tiktoken");
            out << "QQ== zero\n";
        }
        CHECK_THROWS_WITH_AS(import_tiktoken(dir / "junk.tiktoken", {}, Pretokenizer::qwen2),
                             doctest::Contains(":1:"), ParseError);
    }

    TEST_CASE("Hugging Face import")
    {
        testutil::TempDir dir;
        ByteOrder order{};
        const auto table = gpt2_byte_table(order);
        const auto v = sample_vocab(5, order, 500);
        auto visible = [&](const std::string& bytes) {
            std::string s;
            for (unsigned char c : bytes) {
                s += table[c];
            }
            return s;
        };
        nlohmann::ordered_json vocab_json = nlohmann::ordered_json::object();
        for (TokenId id = 0; id < v.size(); ++id) {
            vocab_json[v.is_special(id) ? v.bytes(id) : visible(v.bytes(id))] = id;
        }
        write_file(dir / "vocab.json", vocab_json.dump());
        std::string merges = "#version: 0.2\n";
        for (const auto& m : v.merges()) {
            merges += visible(v.bytes(m.left)) + " " + visible(v.bytes(m.right)) + "\n";
        }
        write_file(dir / "merges.txt", merges);

        const auto r = import_hf(dir / "vocab.json", dir / "merges.txt", {}, Pretokenizer::qwen2);
        CHECK(r.vocab == v);
        CHECK(r.declared == v.size());
        CHECK(r.renumbered == 0);

        // An extra special is appended after those found in vocab.json.
        const auto r2 = import_hf(dir / "vocab.json", dir / "merges.txt", {"<|extra|>"}, Pretokenizer::qwen2);
        CHECK(r2.vocab.size() == v.size() + 1);
        CHECK(r2.vocab.find_special("<|extra|>") == static_cast<TokenId>(v.size()));
    }
}
