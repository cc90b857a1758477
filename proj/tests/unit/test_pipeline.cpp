#include "helpers.hpp"

#include "tkmx/embedding.hpp"
#include "tkmx/error.hpp"
#include "tkmx/io.hpp"
#include "tkmx/pipeline.hpp"
#include "tkmx/vocab_io.hpp"

#include <doctest.h>

#include <fstream>

using namespace tkmx;
namespace fs = std::filesystem;

namespace {

// Writes a small two-language corpus, a base vocabulary and its embeddings
// into `root` and returns the recipe JSON that refers to them.
nlohmann::json make_workspace(const fs::path& root)
{
    std::mt19937_64 rng(11);
    const auto hu = testutil::SyntheticLanguage::make(rng, testutil::latin_letters(), 30, 150);
    const auto en = testutil::SyntheticLanguage::make(rng, {"a", "e", "i", "o", "t", "n", "s", "h", "r"}, 20, 100);
    std::vector<DocumentRecord> docs;
    std::vector<std::string> en_texts;
    for (int i = 0; i < 160; ++i) {
        const bool is_hu = i % 3 != 0;
        std::string text = (is_hu ? hu : en).text(rng, 20 + rng() % 80);
        if (i % 10 == 0) {
            text += "\n\nShared footer line";
        }
        if (!is_hu) en_texts.push_back(text);
        const char* subsets[] = {"news", "wikipedia", "web"};
        docs.push_back(testutil::doc("doc" + std::to_string(i), text, is_hu ? "hu" : "en", subsets[i % 3]));
    }
    docs.push_back(docs[5]); // exact duplicate under a new id
    docs.back().id = "dup";
    docs.push_back(testutil::doc("short", "too short", "hu", "news"));
    write_file(root / "corpus.jsonl", to_jsonl(docs));

    const auto base = testutil::train_vocab(en_texts, 320, {"<|endoftext|>"});
    save_vocab(base, root / "base.json");
    std::vector<float> data(base.size() * 8);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (auto& x : data) x = dist(rng);
    save_embeddings(EmbeddingMatrix(base.size(), 8, vocab_hash(base), std::move(data)), root / "base.emb");

    return nlohmann::json::parse(R"({
        "corpus": "corpus.jsonl",
        "base_vocab": "base.json",
        "base_embeddings": "base.emb",
        "output_dir": "out",
        "filter": {"min_chars": 40, "frequent_threshold": 10},
        "split": {"valid_size": 10, "test_size": 10, "seed": 3},
        "extend": {"n": 25, "langs": ["hu"]},
        "pack": {"window": 256},
        "fertility": {"mode": "corpus"}
    })");
}

RunResult run_in(const fs::path& root, const nlohmann::json& recipe, bool force = false)
{
    return run(RecipeConfig::from_json(recipe), RunOptions{root, force, 2});
}

std::vector<std::string> all_stages()
{
    return stage_names();
}

} // namespace

TEST_SUITE("pipeline")
{
    TEST_CASE("a toy recipe runs every stage, then resumes without work")
    {
        testutil::TempDir dir;
        const auto recipe = make_workspace(dir.path());
        const auto first = run_in(dir.path(), recipe);
        CHECK(first.executed == all_stages());
        CHECK(first.skipped.empty());
        REQUIRE(first.manifest["stages"].size() == 8);
        for (const auto& s : first.manifest["stages"]) {
            CHECK(s.contains("inputs"));
            CHECK(s.contains("params_hash"));
            CHECK(!s["outputs"].empty());
        }
        for (const char* f : {"filtered.jsonl", "dedup.jsonl", "train.jsonl", "valid.jsonl", "test.jsonl", "mix.jsonl",
                              "composition.json", "extended.json", "extended.emb", "train.tkpk", "fertility.json",
                              "manifest.json"}) {
            CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
        }
        const auto extended = load_vocab(dir / "out" / "extended.json");
        const auto base = load_vocab(dir / "base.json");
        CHECK(extended.size() == base.size() + 25);
        CHECK(load_embeddings(dir / "out" / "extended.emb").aligned_with(extended));
        const auto valid = read_documents(dir / "out" / "valid.jsonl");
        CHECK(valid.size() == 10);
        std::uint32_t window = 0;
        for (const auto& w : read_shard(dir / "out" / "train.tkpk", &window)) {
            CHECK(w.size() <= 256);
        }
        CHECK(window == 256);

        const auto manifest = read_file(dir / "out" / "manifest.json");
        const auto second = run_in(dir.path(), recipe);
        CHECK(second.executed.empty());
        CHECK(second.skipped == all_stages());
        CHECK(read_file(dir / "out" / "manifest.json") == manifest);
    }

    TEST_CASE("changing a parameter reruns only the affected stage")
    {
        testutil::TempDir dir;
        auto recipe = make_workspace(dir.path());
        run_in(dir.path(), recipe);
        recipe["pack"]["window"] = 512;
        const auto r = run_in(dir.path(), recipe);
        CHECK(r.executed == std::vector<std::string>{"pack"});
        recipe["extend"]["n"] = 30;
        const auto r2 = run_in(dir.path(), recipe);
        CHECK(r2.executed == std::vector<std::string>{"extend", "vipi", "pack", "fertility"});
    }

    TEST_CASE("tampered outputs stop the run unless forced")
    {
        testutil::TempDir dir;
        const auto recipe = make_workspace(dir.path());
        run_in(dir.path(), recipe);
        std::ofstream(dir / "out" / "mix.jsonl", std::ios::app) << "\n";
        CHECK_THROWS_AS(run_in(dir.path(), recipe), DataError);
        const auto forced = run_in(dir.path(), recipe, true);
        CHECK(forced.executed == std::vector<std::string>{"oversample"});
        CHECK(run_in(dir.path(), recipe).executed.empty());
        fs::remove(dir / "out" / "fertility.txt");
        CHECK_THROWS_AS(run_in(dir.path(), recipe), DataError);
    }

    TEST_CASE("manifests are reproducible across workspaces")
    {
        testutil::TempDir a, b;
        const auto recipe = make_workspace(a.path());
        make_workspace(b.path());
        run_in(a.path(), recipe);
        run(RecipeConfig::from_json(recipe), RunOptions{b.path(), false, 1});
        CHECK(read_file(a / "out" / "manifest.json") == read_file(b / "out" / "manifest.json"));
        CHECK(read_file(a / "out" / "train.tkpk") == read_file(b / "out" / "train.tkpk"));
    }

    TEST_CASE("recipe validation")
    {
        auto base = nlohmann::json::parse(R"({"corpus":"c","base_vocab":"v","base_embeddings":"e"})");
        CHECK_NOTHROW(RecipeConfig::from_json(base));
        auto bad = base;
        bad["colour"] = 1;
        CHECK_THROWS_AS(RecipeConfig::from_json(bad), ConfigError);
        bad = base;
        bad["pack"] = {{"window", 1}};
        CHECK_THROWS_AS(RecipeConfig::from_json(bad), ConfigError);
        bad = base;
        bad["filter"] = {{"min_chars", "many"}};
        CHECK_THROWS_AS(RecipeConfig::from_json(bad), ConfigError);
        bad = base;
        bad["split"] = {{"valid", 3}};
        CHECK_THROWS_AS(RecipeConfig::from_json(bad), ConfigError);
        CHECK_THROWS_AS(RecipeConfig::from_json(nlohmann::json::parse(R"({"corpus":"c"})")), ConfigError);
        const auto c = RecipeConfig::from_json(base);
        CHECK(RecipeConfig::from_json(c.to_json()).to_json() == c.to_json());
        CHECK(c.mixture.weight("wikipedia") == 3.0);
    }

    TEST_CASE("stage failures name the stage")
    {
        testutil::TempDir dir;
        auto recipe = make_workspace(dir.path());
        recipe["split"]["valid_size"] = 100000;
        try {
            run_in(dir.path(), recipe);
            FAIL("expected failure");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("stage 'split'") != std::string::npos);
        }
        recipe["split"]["valid_size"] = 10;
        recipe["pack"]["delimiter"] = "<|missing|>";
        CHECK_THROWS_AS(run_in(dir.path(), recipe), ConfigError);
    }
}
