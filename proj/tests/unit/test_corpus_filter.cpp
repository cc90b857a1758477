#include "helpers.hpp"
#include "../oracles/reference.hpp"

#include "tkmx/corpus_filter.hpp"

#include <doctest.h>

using namespace tkmx;

namespace {

std::vector<std::string> paragraphs(const std::string& text)
{
    std::vector<std::string> out;
    for (const auto& s : split_paragraphs(text)) {
        out.push_back(text.substr(s.begin, s.end - s.begin));
    }
    return out;
}

std::string words(std::mt19937_64& rng, std::size_t n)
{
    static const std::vector<std::string> vocab = {"alma", "körte", "szilva", "barack", "dió", "mogyoró", "szőlő",
                                                   "eper", "málna", "citrom", "narancs", "füge", "datolya", "meggy",
                                                   "cseresznye", "ribizli", "áfonya", "kókusz", "banán", "kivi"};
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        out += (i ? " " : "") + vocab[rng() % vocab.size()] + std::to_string(rng() % 1000);
    }
    return out;
}

// Independent re-statement of the paragraph dedup rule.
std::vector<std::vector<std::string>> reference_dedup(const std::vector<DocumentRecord>& docs, std::size_t n)
{
    std::set<std::string> seen;
    std::vector<std::vector<std::string>> kept_per_doc;
    for (const auto& d : docs) {
        std::vector<std::string> kept;
        for (const auto& p : paragraphs(d.text)) {
            auto keys = oracle::ngrams(p, n);
            const auto toks = oracle::whitespace_tokens(oracle::nfc(p));
            if (toks.size() < n) {
                std::string joined = "\x01";
                for (std::size_t i = 0; i < toks.size(); ++i) {
                    joined += (i ? " " : "") + toks[i];
                }
                keys = {joined};
            }
            bool dup = false;
            for (const auto& k : keys) {
                dup = dup || seen.contains(k);
            }
            if (!dup) {
                seen.insert(keys.begin(), keys.end());
                kept.push_back(p);
            }
        }
        kept_per_doc.push_back(kept);
    }
    return kept_per_doc;
}

} // namespace

TEST_SUITE("corpus_filter")
{
    TEST_CASE("paragraph splitting")
    {
        const std::string t = "\n\nfirst line\nsecond line\n  \t\nthird\n\n\nfourth";
        const auto p = paragraphs(t);
        REQUIRE(p.size() == 3);
        CHECK(p[0] == "first line\nsecond line");
        CHECK(p[1] == "third");
        CHECK(p[2] == "fourth");
        CHECK(split_paragraphs("").empty());
        CHECK(split_paragraphs(" \n \n").empty());
    }

    TEST_CASE("removing paragraphs keeps a subsequence")
    {
        const std::string t = "a\n\nb\n\nc";
        const auto spans = split_paragraphs(t);
        CHECK(remove_paragraphs(t, spans, {true, false, true}) == "a\n\nc");
        CHECK(remove_paragraphs(t, spans, {false, true, true}) == "b\n\nc");
        CHECK(remove_paragraphs(t, spans, {true, true, false}) == "a\n\nb\n\n");
        CHECK(remove_paragraphs(t, spans, {true, true, true}) == t);
    }

    TEST_CASE("length filter counts code points")
    {
        FilterStats stats;
        std::vector<DocumentRecord> docs = {testutil::doc("a", std::string(499, 'x')),
                                            testutil::doc("b", std::string(500, 'x')),
                                            testutil::doc("c", [] {
                                                std::string s;
                                                for (int i = 0; i < 499; ++i) s += "ő";
                                                return s;
                                            }())};
        const auto out = length_filter(docs, 500, stats);
        REQUIRE(out.size() == 1);
        CHECK(out[0].id == "b");
        CHECK(stats.dropped_short == 2);
        CHECK(stats.balanced());
    }

    TEST_CASE("document dedup normalizes NFC and whitespace")
    {
        FilterStats stats;
        const auto out = dedup_documents({testutil::doc("1", "café  au lait"), testutil::doc("2", " café au\nlait "),
                                          testutil::doc("3", "cafe au lait")},
                                         stats);
        REQUIRE(out.size() == 2);
        CHECK(out[0].id == "1");
        CHECK(out[1].id == "3");
        CHECK(stats.dropped_dup_doc == 1);
        CHECK(stats.balanced());
    }

    TEST_CASE("13-gram boundaries")
    {
        std::mt19937_64 rng(1);
        const auto base = oracle::whitespace_tokens(words(rng, 40));
        auto join = [&](std::size_t from, std::size_t to) {
            std::string s;
            for (std::size_t i = from; i < to; ++i) s += (i > from ? " " : "") + base[i];
            return s;
        };
        const std::string original = join(0, 30);
        // Shares exactly 12 consecutive tokens with the original.
        const std::string near = join(18, 30) + " " + words(rng, 20);
        // Shares 13.
        const std::string overlap = words(rng, 5) + " " + join(10, 23) + " " + words(rng, 5);
        FilterStats stats;
        const auto out = dedup_paragraphs({testutil::doc("o", original), testutil::doc("n", near),
                                           testutil::doc("x", overlap), testutil::doc("d", original)},
                                          stats);
        REQUIRE(out.size() == 2);
        CHECK(out[0].id == "o");
        CHECK(out[1].id == "n");
        CHECK(stats.dropped_dup_para == 2);
        CHECK(stats.paragraphs_dropped_dup == 2);
        CHECK(stats.balanced());
    }

    TEST_CASE("short paragraphs match on their exact normalized text")
    {
        FilterStats stats;
        const auto out = dedup_paragraphs({testutil::doc("1", "Hello there.\n\nBody one is here."),
                                           testutil::doc("2", "Hello   there.\n\nBody two is different."),
                                           testutil::doc("3", "Hello there!\n\nBody one is here.")},
                                          stats);
        REQUIRE(out.size() == 3);
        CHECK(out[1].text == "Body two is different.");
        CHECK(out[2].text == "Hello there!\n\n");
    }

    TEST_CASE("agrees with the reference on random corpora, hashed and exact")
    {
        std::mt19937_64 rng(2);
        for (int round = 0; round < 10; ++round) {
            std::vector<std::string> pool;
            for (int i = 0; i < 30; ++i) {
                pool.push_back(words(rng, 5 + rng() % 25));
            }
            std::vector<DocumentRecord> docs;
            for (int d = 0; d < 60; ++d) {
                std::string text;
                for (int p = 0, np = 1 + static_cast<int>(rng() % 4); p < np; ++p) {
                    text += (p ? "\n\n" : "") + (rng() % 2 ? pool[rng() % pool.size()] : words(rng, 3 + rng() % 20));
                }
                docs.push_back(testutil::doc("d" + std::to_string(d), text));
            }
            const auto want = reference_dedup(docs, 13);
            for (bool exact : {false, true}) {
                FilterStats stats;
                const auto out = dedup_paragraphs(docs, stats, ParagraphDedupOptions{13, exact});
                std::size_t j = 0;
                for (std::size_t i = 0; i < docs.size(); ++i) {
                    if (want[i].empty()) {
                        continue;
                    }
                    REQUIRE(j < out.size());
                    CHECK(out[j].id == docs[i].id);
                    CHECK(paragraphs(out[j].text) == want[i]);
                    ++j;
                }
                CHECK(j == out.size());
                CHECK(stats.balanced());
            }
        }
    }

    TEST_CASE("frequent paragraphs: strict threshold, per subset")
    {
        std::vector<DocumentRecord> docs;
        for (int i = 0; i < 12; ++i) {
            const std::string body = "Unique body number " + std::to_string(i);
            const bool news = i < 11;
            docs.push_back(testutil::doc(std::to_string(i), "Cookie banner text\n\n" + body, "hu", news ? "news" : "web"));
        }
        FilterStats stats;
        // 11 news copies > 10: removed from news; the single web copy stays.
        auto out = drop_frequent_paragraphs(docs, 10, stats);
        REQUIRE(out.size() == 12);
        CHECK(out[0].text == "Unique body number 0");
        CHECK(out[11].text.rfind("Cookie banner text", 0) == 0);
        CHECK(stats.paragraphs_dropped_frequent == 11);
        FilterStats keep;
        out = drop_frequent_paragraphs(docs, 11, keep);
        CHECK(keep.paragraphs_dropped_frequent == 0);
        // A document made only of a frequent paragraph disappears.
        std::vector<DocumentRecord> only(12, testutil::doc("x", "boilerplate", "hu", "news"));
        for (std::size_t i = 0; i < only.size(); ++i) only[i].id = std::to_string(i);
        FilterStats gone;
        CHECK(drop_frequent_paragraphs(only, 10, gone).empty());
        CHECK(gone.dropped_frequent_para == 12);
        CHECK(gone.balanced());
    }

    TEST_CASE("the chain is idempotent and its stats balance")
    {
        std::mt19937_64 rng(3);
        std::vector<std::string> pool;
        for (int i = 0; i < 40; ++i) {
            pool.push_back(words(rng, 10 + rng() % 40));
        }
        std::vector<DocumentRecord> docs;
        for (int d = 0; d < 300; ++d) {
            std::string text;
            for (int p = 0, np = 1 + static_cast<int>(rng() % 6); p < np; ++p) {
                text += (p ? "\n\n" : "") + (rng() % 3 == 0 ? pool[rng() % pool.size()] : words(rng, 5 + rng() % 60));
            }
            docs.push_back(testutil::doc("d" + std::to_string(d), text, "hu", rng() % 2 ? "news" : "web"));
        }
        FilterChainOptions opts;
        opts.min_chars = 200;
        opts.frequent_threshold = 3;
        FilterStats first;
        const auto once = run_filter_chain(docs, opts, first);
        CHECK(first.balanced());
        CHECK(first.in_docs == docs.size());
        CHECK(once.size() < docs.size());
        FilterStats second;
        const auto twice = run_filter_chain(once, opts, second);
        CHECK(twice == once);
        CHECK(second.out_docs == second.in_docs);
        CHECK(second.paragraphs_dropped_dup == 0);
        CHECK(second.paragraphs_dropped_frequent == 0);
    }
}
