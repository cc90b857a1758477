#include "tkmx/pipeline.hpp"

#include "tkmx/bpe.hpp"
#include "tkmx/embedding.hpp"
#include "tkmx/error.hpp"
#include "tkmx/hash.hpp"
#include "tkmx/io.hpp"
#include "tkmx/vocab_io.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace tkmx {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void check_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& into, const std::string& where)
{
    if (!j.contains(key)) {
        return;
    }
    try {
        into = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

std::string fertility_mode_name(FertilityMode m)
{
    return m == FertilityMode::corpus ? "corpus" : "document";
}

} // namespace

RecipeConfig RecipeConfig::from_json(const nlohmann::json& j)
{
    check_keys(j, "recipe",
               {"corpus", "base_vocab", "base_embeddings", "output_dir", "filter", "split", "mixture", "extend", "pack",
                "fertility"});
    RecipeConfig c;
    c.mixture = MixtureSpec::hungarian_defaults();
    std::string corpus, base_vocab, base_embeddings, output_dir = c.output_dir.string();
    read_opt(j, "corpus", corpus, "recipe");
    read_opt(j, "base_vocab", base_vocab, "recipe");
    read_opt(j, "base_embeddings", base_embeddings, "recipe");
    read_opt(j, "output_dir", output_dir, "recipe");
    if (corpus.empty() || base_vocab.empty() || base_embeddings.empty()) {
        throw ConfigError("recipe needs 'corpus', 'base_vocab' and 'base_embeddings'");
    }
    c.corpus = corpus;
    c.base_vocab = base_vocab;
    c.base_embeddings = base_embeddings;
    c.output_dir = output_dir;

    if (j.contains("filter")) {
        const auto& f = j.at("filter");
        check_keys(f, "filter", {"min_chars", "frequent_threshold", "ngram", "exact"});
        read_opt(f, "min_chars", c.filter.min_chars, "filter");
        read_opt(f, "frequent_threshold", c.filter.frequent_threshold, "filter");
        read_opt(f, "ngram", c.filter.paragraph.ngram, "filter");
        read_opt(f, "exact", c.filter.paragraph.exact, "filter");
        if (c.filter.paragraph.ngram == 0) {
            throw ConfigError("filter.ngram must be positive");
        }
    }
    if (j.contains("split")) {
        check_keys(j.at("split"), "split", {"valid_size", "test_size", "stratify_by", "seed"});
        c.split = SplitSpec::from_json(j.at("split"));
    }
    if (j.contains("mixture")) {
        check_keys(j.at("mixture"), "mixture", {"weights", "seed"});
        c.mixture = MixtureSpec::from_json(j.at("mixture"));
    }
    if (j.contains("extend")) {
        const auto& e = j.at("extend");
        check_keys(e, "extend", {"n", "latin_filter", "langs"});
        read_opt(e, "n", c.extension.n, "extend");
        read_opt(e, "latin_filter", c.extension.latin_filter, "extend");
        read_opt(e, "langs", c.extend_langs, "extend");
    }
    if (j.contains("pack")) {
        const auto& p = j.at("pack");
        check_keys(p, "pack", {"window", "long_doc", "delimiter"});
        read_opt(p, "window", c.window, "pack");
        std::string policy = to_string(c.long_doc);
        read_opt(p, "long_doc", policy, "pack");
        c.long_doc = long_doc_policy_from_string(policy);
        read_opt(p, "delimiter", c.delimiter, "pack");
        PackerConfig{c.window, 0, c.long_doc}.validate();
    }
    if (j.contains("fertility")) {
        const auto& f = j.at("fertility");
        check_keys(f, "fertility", {"mode"});
        std::string mode = "corpus";
        read_opt(f, "mode", mode, "fertility");
        if (mode == "corpus") {
            c.fertility_mode = FertilityMode::corpus;
        } else if (mode == "document") {
            c.fertility_mode = FertilityMode::document;
        } else {
            throw ConfigError("fertility.mode must be 'corpus' or 'document'");
        }
    }
    return c;
}

ojson RecipeConfig::to_json() const
{
    ojson j;
    j["corpus"] = corpus.generic_string();
    j["base_vocab"] = base_vocab.generic_string();
    j["base_embeddings"] = base_embeddings.generic_string();
    j["output_dir"] = output_dir.generic_string();
    j["filter"] = {{"min_chars", filter.min_chars},
                   {"frequent_threshold", filter.frequent_threshold},
                   {"ngram", filter.paragraph.ngram},
                   {"exact", filter.paragraph.exact}};
    j["split"] = {{"valid_size", split.valid_size},
                  {"test_size", split.test_size},
                  {"stratify_by", split.stratify_by},
                  {"seed", split.seed}};
    j["mixture"] = {{"weights", mixture.weights}, {"seed", mixture.seed}};
    j["extend"] = {{"n", extension.n}, {"latin_filter", extension.latin_filter}, {"langs", extend_langs}};
    j["pack"] = {{"window", window}, {"long_doc", to_string(long_doc)}, {"delimiter", delimiter}};
    j["fertility"] = {{"mode", fertility_mode_name(fertility_mode)}};
    return j;
}

const std::vector<std::string>& stage_names()
{
    static const std::vector<std::string> names = {"filter",     "dedup",  "split", "oversample",
                                                   "extend",     "vipi",   "pack",  "fertility"};
    return names;
}

fs::path resolve_workspace(const std::optional<fs::path>& explicit_root)
{
    if (explicit_root && !explicit_root->empty()) {
        return *explicit_root;
    }
    if (const char* env = std::getenv("TKMX_WORKSPACE"); env != nullptr && *env != '\0') {
        return fs::path(env);
    }
    return fs::current_path();
}

namespace {

struct Stage {
    std::string name;
    // Workspace-relative paths.
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    ojson params;
    // Writes the outputs and returns stage statistics.
    std::function<ojson()> action;
};

class Runner {
public:
    Runner(const RecipeConfig& config, const RunOptions& options)
        : config_(config), options_(options), root_(options.workspace.empty() ? resolve_workspace({}) : options.workspace)
    {
        out_ = config_.output_dir;
        manifest_path_ = root_ / out_ / "manifest.json";
    }

    RunResult run()
    {
        load_previous();
        RunResult result;
        ojson stages = ojson::array();
        const auto plan = build_stages();
        for (std::size_t i = 0; i < plan.size(); ++i) {
            stages.push_back(execute(plan[i], result));
            // Keep the old records of stages not reached yet, so a failure
            // part-way does not force their rebuild on the next run.
            ojson snapshot = stages;
            for (std::size_t j = i + 1; j < plan.size(); ++j) {
                if (const auto it = previous_.find(plan[j].name); it != previous_.end()) {
                    snapshot.push_back(it->second);
                }
            }
            write_manifest(snapshot);
        }
        result.manifest = manifest_json(stages);
        return result;
    }

private:
    const RecipeConfig& config_;
    const RunOptions& options_;
    fs::path root_;
    fs::path out_;
    fs::path manifest_path_;
    std::map<std::string, ojson> previous_;

    fs::path abs(const fs::path& rel) const { return root_ / rel; }
    fs::path o(const char* name) const { return out_ / name; }

    ojson manifest_json(const ojson& stages) const
    {
        ojson m;
        m["version"] = 1;
        m["stages"] = stages;
        return m;
    }

    void write_manifest(const ojson& stages) const
    {
        write_file(manifest_path_, manifest_json(stages).dump(2) + "\n");
    }

    void load_previous()
    {
        if (!fs::exists(manifest_path_)) {
            return;
        }
        ojson m;
        try {
            m = ojson::parse(read_file(manifest_path_));
            for (const auto& s : m.at("stages")) {
                previous_[s.at("stage").get<std::string>()] = s;
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corrupt manifest " + manifest_path_.string() + ": " + e.what());
        }
    }

    ojson hash_files(const std::vector<fs::path>& paths, const std::string& stage, const char* role) const
    {
        ojson h = ojson::object();
        for (const auto& p : paths) {
            if (!fs::exists(abs(p))) {
                throw DataError("stage '" + stage + "': missing " + role + " " + abs(p).string());
            }
            h[p.generic_string()] = sha256_file_hex(abs(p));
        }
        return h;
    }

    ojson execute(const Stage& stage, RunResult& result)
    {
        const ojson inputs = hash_files(stage.inputs, stage.name, "input");
        const std::string params_hash = sha256_hex(stage.params.dump());
        if (const auto it = previous_.find(stage.name); it != previous_.end()) {
            const ojson& prev = it->second;
            if (prev.value("inputs", ojson()) == inputs && prev.value("params_hash", std::string()) == params_hash) {
                std::string problem;
                const ojson recorded = prev.value("outputs", ojson::object());
                for (const auto& out : stage.outputs) {
                    const auto key = out.generic_string();
                    if (!recorded.contains(key)) {
                        problem = key + " is not recorded";
                    } else if (!fs::exists(abs(out))) {
                        problem = key + " was removed";
                    } else if (sha256_file_hex(abs(out)) != recorded.at(key).get<std::string>()) {
                        problem = key + " was modified";
                    }
                    if (!problem.empty()) {
                        break;
                    }
                }
                if (problem.empty()) {
                    result.skipped.push_back(stage.name);
                    return prev;
                }
                if (!options_.force) {
                    throw DataError("stage '" + stage.name + "': output " + problem +
                                    " since the last run; rerun with --force to rebuild it");
                }
            }
        }
        ojson stats;
        try {
            stats = stage.action();
        } catch (const ConfigError& e) {
            throw ConfigError("stage '" + stage.name + "': " + e.what());
        } catch (const std::exception& e) {
            throw DataError("stage '" + stage.name + "': " + e.what());
        }
        result.executed.push_back(stage.name);
        ojson entry;
        entry["stage"] = stage.name;
        entry["inputs"] = inputs;
        entry["params"] = stage.params;
        entry["params_hash"] = params_hash;
        entry["outputs"] = hash_files(stage.outputs, stage.name, "output");
        entry["stats"] = std::move(stats);
        return entry;
    }

    std::vector<DocumentRecord> docs(const fs::path& rel) const { return read_documents(abs(rel)); }

    void save_docs(const fs::path& rel, const std::vector<DocumentRecord>& d) const { write_file(abs(rel), to_jsonl(d)); }

    std::vector<Stage> build_stages() const
    {
        const auto& c = config_;
        std::vector<Stage> s;

        s.push_back({"filter",
                     {c.corpus},
                     {o("filtered.jsonl")},
                     {{"min_chars", c.filter.min_chars}, {"frequent_threshold", c.filter.frequent_threshold}},
                     [this, &c] {
                         FilterStats frequent, length;
                         auto d = drop_frequent_paragraphs(docs(c.corpus), c.filter.frequent_threshold, frequent);
                         d = length_filter(std::move(d), c.filter.min_chars, length);
                         save_docs(o("filtered.jsonl"), d);
                         return ojson{{"frequent", to_json(frequent)}, {"length", to_json(length)}};
                     }});

        s.push_back({"dedup",
                     {o("filtered.jsonl")},
                     {o("dedup.jsonl")},
                     {{"ngram", c.filter.paragraph.ngram},
                      {"exact", c.filter.paragraph.exact},
                      {"min_chars", c.filter.min_chars}},
                     [this, &c] {
                         FilterStats doc, para, length;
                         auto d = dedup_documents(docs(o("filtered.jsonl")), doc);
                         d = dedup_paragraphs(std::move(d), para, c.filter.paragraph);
                         // Paragraph removal can shorten documents below the threshold.
                         d = length_filter(std::move(d), c.filter.min_chars, length);
                         save_docs(o("dedup.jsonl"), d);
                         return ojson{{"documents", to_json(doc)}, {"paragraphs", to_json(para)}, {"length", to_json(length)}};
                     }});

        s.push_back({"split",
                     {o("dedup.jsonl")},
                     {o("train.jsonl"), o("valid.jsonl"), o("test.jsonl")},
                     {{"valid_size", c.split.valid_size},
                      {"test_size", c.split.test_size},
                      {"stratify_by", c.split.stratify_by},
                      {"seed", c.split.seed}},
                     [this, &c] {
                         const auto r = split(docs(o("dedup.jsonl")), c.split);
                         save_docs(o("train.jsonl"), r.train);
                         save_docs(o("valid.jsonl"), r.valid);
                         save_docs(o("test.jsonl"), r.test);
                         return ojson{{"train", r.train.size()}, {"valid", r.valid.size()}, {"test", r.test.size()}};
                     }});

        s.push_back({"oversample",
                     {o("train.jsonl"), c.base_vocab},
                     {o("mix.jsonl"), o("composition.json"), o("composition.txt")},
                     {{"weights", c.mixture.weights}, {"seed", c.mixture.seed}},
                     [this, &c] {
                         const auto base = load_vocab(abs(c.base_vocab));
                         const auto train = docs(o("train.jsonl"));
                         const auto mix = oversample(train, c.mixture);
                         save_docs(o("mix.jsonl"), mix);
                         auto pre = compose_report(train, base, options_.threads);
                         pre.label = "pre-oversampling";
                         auto post = compose_report(mix, base, options_.threads);
                         post.label = "post-oversampling";
                         write_file(abs(o("composition.json")),
                                    ojson{{"pre", pre.to_json()}, {"post", post.to_json()}}.dump(2) + "\n");
                         write_file(abs(o("composition.txt")), pre.to_table() + "\n" + post.to_table());
                         return ojson{{"documents_in", train.size()}, {"documents_out", mix.size()}};
                     }});

        s.push_back({"extend",
                     {c.base_vocab, o("train.jsonl")},
                     {o("extended.json"), o("extend_report.json")},
                     {{"n", c.extension.n}, {"latin_filter", c.extension.latin_filter}, {"langs", c.extend_langs}},
                     [this, &c] {
                         const auto base = load_vocab(abs(c.base_vocab));
                         const std::set<std::string> langs(c.extend_langs.begin(), c.extend_langs.end());
                         std::vector<std::string> texts;
                         for (auto& d : docs(o("train.jsonl"))) {
                             if (langs.contains(d.lang)) {
                                 texts.push_back(std::move(d.text));
                             }
                         }
                         const auto counter = count_pretokens(texts, base.pretokenizer(), options_.threads);
                         const auto r = extend(base, counter, c.extension);
                         save_vocab(r.vocab, abs(o("extended.json")));
                         const auto report = to_json(r.report);
                         write_file(abs(o("extend_report.json")), report.dump(2) + "\n");
                         return ojson{{"documents", texts.size()},
                                      {"m", r.report.m},
                                      {"n", r.report.n},
                                      {"removed_non_latin", r.report.removed_non_latin},
                                      {"final_size", r.report.final_size}};
                     }});

        s.push_back({"vipi",
                     {c.base_vocab, c.base_embeddings, o("extended.json")},
                     {o("extended.emb")},
                     ojson::object(),
                     [this, &c] {
                         const auto base = load_vocab(abs(c.base_vocab));
                         const auto ext = load_vocab(abs(o("extended.json")));
                         const auto emb = load_embeddings(abs(c.base_embeddings));
                         const auto r = vipi_init(base, emb, ext, options_.threads);
                         save_embeddings(r.embeddings, abs(o("extended.emb")));
                         return ojson{{"inherited", r.report.inherited},
                                      {"averaged", r.report.averaged},
                                      {"byte_fallback", r.report.byte_fallback.size()}};
                     }});

        s.push_back({"pack",
                     {o("extended.json"), o("mix.jsonl")},
                     {o("train.tkpk"), o("train.spans.jsonl")},
                     {{"window", c.window}, {"long_doc", to_string(c.long_doc)}, {"delimiter", c.delimiter}},
                     [this, &c] {
                         const auto ext = load_vocab(abs(o("extended.json")));
                         const auto delim = ext.find_special(c.delimiter);
                         if (!delim) {
                             throw ConfigError("delimiter '" + c.delimiter + "' is not a special token of the vocabulary");
                         }
                         const PackerConfig cfg{c.window, *delim, c.long_doc};
                         cfg.validate(ext);
                         const auto mix = docs(o("mix.jsonl"));
                         std::vector<TokenizedDocument> tokenized(mix.size());
                         const std::size_t threads = std::max<std::size_t>(1, std::min(options_.threads, mix.size()));
                         auto work = [&](std::size_t begin, std::size_t end) {
                             CachingEncoder enc(ext);
                             for (std::size_t i = begin; i < end; ++i) {
                                 tokenized[i] = {mix[i].id, enc.encode(mix[i].text)};
                             }
                         };
                         std::vector<std::thread> pool;
                         const std::size_t chunk = (mix.size() + threads - 1) / std::max<std::size_t>(threads, 1);
                         for (std::size_t t = 0; t < threads; ++t) {
                             const std::size_t begin = std::min(mix.size(), t * chunk);
                             pool.emplace_back(work, begin, std::min(mix.size(), begin + chunk));
                         }
                         for (auto& th : pool) {
                             th.join();
                         }
                         ShardWriter shard(abs(o("train.tkpk")), static_cast<std::uint32_t>(c.window));
                         std::string sidecar;
                         std::size_t index = 0;
                         Packer packer(cfg, ext.size(), [&](PackedWindow&& w) {
                             shard.write(w.ids);
                             sidecar += spans_to_jsonl(index++, w);
                             sidecar += '\n';
                         });
                         for (const auto& d : tokenized) {
                             packer.push(d);
                         }
                         packer.finish();
                         shard.close();
                         write_file(abs(o("train.spans.jsonl")), sidecar);
                         auto stats = to_json(packer.stats());
                         stats["mean_fill"] = packer.stats().mean_fill(c.window);
                         return ojson(stats);
                     }});

        s.push_back({"fertility",
                     {c.base_vocab, o("extended.json"), o("valid.jsonl")},
                     {o("fertility.json"), o("fertility.txt")},
                     {{"mode", fertility_mode_name(c.fertility_mode)}},
                     [this, &c] {
                         const auto base = load_vocab(abs(c.base_vocab));
                         const auto ext = load_vocab(abs(o("extended.json")));
                         std::map<std::string, std::vector<std::string>> by_lang;
                         for (auto& d : docs(o("valid.jsonl"))) {
                             by_lang[d.lang].push_back(std::move(d.text));
                         }
                         auto report = compare(base, ext, by_lang, c.fertility_mode, options_.threads);
                         report.base_name = c.base_vocab.stem().string();
                         report.adapted_name = "extended";
                         write_file(abs(o("fertility.json")), report.to_json().dump(2) + "\n");
                         write_file(abs(o("fertility.txt")), report.to_table());
                         ojson stats = ojson::object();
                         for (const auto& r : report.rows) {
                             stats[r.lang] = {{"base", r.base}, {"adapted", r.adapted}, {"change_percent", r.change()}};
                         }
                         return stats;
                     }});
        return s;
    }
};

} // namespace

RunResult run(const RecipeConfig& config, const RunOptions& options)
{
    return Runner(config, options).run();
}

} // namespace tkmx
