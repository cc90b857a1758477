#include "tkmx/error.hpp"
#include "tkmx/vocabulary.hpp"

#include <doctest.h>

using namespace tkmx;

namespace {

TokenId id_of(char c)
{
    return static_cast<TokenId>(static_cast<unsigned char>(c));
}

} // namespace

TEST_SUITE("vocabulary")
{
    TEST_CASE("layout: bytes, merges, specials")
    {
        const Vocabulary v(identity_byte_order(), {{id_of('a'), id_of('b')}, {256, id_of('c')}}, {"<|endoftext|>"},
                           Pretokenizer::gpt2);
        CHECK(v.size() == 259);
        CHECK(v.num_regular() == 258);
        CHECK(v.bytes(256) == "ab");
        CHECK(v.bytes(257) == "abc");
        CHECK(v.bytes(258) == "<|endoftext|>");
        CHECK(v.is_special(258));
        CHECK_FALSE(v.is_special(257));
        CHECK(v.find_regular("abc") == 257u);
        CHECK_FALSE(v.find_regular("<|endoftext|>").has_value());
        CHECK(v.find_special("<|endoftext|>") == 258u);
        CHECK(v.merge_rank(id_of('a'), id_of('b')) == 0u);
        CHECK_FALSE(v.merge_rank(id_of('b'), id_of('a')).has_value());
        CHECK_THROWS_AS(v.bytes(259), RangeError);
    }

    TEST_CASE("permuted base order")
    {
        ByteOrder order = identity_byte_order();
        std::swap(order[0], order[97]);
        const Vocabulary v(order, {}, {}, Pretokenizer::gpt2);
        CHECK(v.bytes(0) == "a");
        CHECK(v.byte_token('a') == 0u);
        CHECK(v.byte_token(0) == 97u);
    }

    TEST_CASE("structural errors")
    {
        ByteOrder dup = identity_byte_order();
        dup[1] = 0;
        CHECK_THROWS_AS(Vocabulary(dup, {}, {}, Pretokenizer::gpt2), ParseError);
        CHECK_THROWS_WITH_AS(Vocabulary(identity_byte_order(), {{1, 300}}, {}, Pretokenizer::gpt2),
                             doctest::Contains("merge 0"), ParseError);
        // A merge may only use tokens defined before it.
        CHECK_THROWS_AS(Vocabulary(identity_byte_order(), {{256, 1}}, {}, Pretokenizer::gpt2), ParseError);
        CHECK_THROWS_AS(Vocabulary(identity_byte_order(), {{1, 2}, {1, 2}}, {}, Pretokenizer::gpt2), ParseError);
        // Two merges producing the same bytes.
        CHECK_THROWS_AS(Vocabulary(identity_byte_order(), {{1, 2}, {2, 3}, {256, 3}, {1, 257}}, {}, Pretokenizer::gpt2),
                        ParseError);
        CHECK_THROWS_AS(Vocabulary(identity_byte_order(), {}, {""}, Pretokenizer::gpt2), ParseError);
        CHECK_THROWS_AS(Vocabulary(identity_byte_order(), {}, {"<s>", "<s>"}, Pretokenizer::gpt2), ParseError);
    }

    TEST_CASE("copies stay usable after the source is gone")
    {
        Vocabulary copy;
        {
            const Vocabulary v(identity_byte_order(), {{id_of('x'), id_of('y')}}, {"<pad>"}, Pretokenizer::qwen2);
            copy = v;
        }
        CHECK(copy.find_regular("xy") == 256u);
        CHECK(copy.find_special("<pad>") == 257u);
        CHECK(copy.pretokenizer() == Pretokenizer::qwen2);
    }
}
