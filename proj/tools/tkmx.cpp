// tkmx: vocabulary adaptation and corpus preparation toolkit.

#include "tkmx/bpe.hpp"
#include "tkmx/corpus_filter.hpp"
#include "tkmx/document.hpp"
#include "tkmx/embedding.hpp"
#include "tkmx/error.hpp"
#include "tkmx/fertility.hpp"
#include "tkmx/io.hpp"
#include "tkmx/mixture.hpp"
#include "tkmx/packer.hpp"
#include "tkmx/pipeline.hpp"
#include "tkmx/vocab_extend.hpp"
#include "tkmx/vocab_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

using namespace tkmx;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Globals {
    bool json = false;
    std::size_t threads = 1;
};

// "-" means stdin / stdout.
class Input {
public:
    explicit Input(const std::string& path)
    {
        if (path == "-") {
            in_ = &std::cin;
        } else {
            file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
            if (!*file_) {
                throw DataError("cannot open " + path);
            }
            in_ = file_.get();
        }
    }
    std::istream& get() { return *in_; }

private:
    std::unique_ptr<std::ifstream> file_;
    std::istream* in_ = nullptr;
};

class Output {
public:
    explicit Output(const std::string& path) : stdout_(path == "-")
    {
        if (stdout_) {
            out_ = &std::cout;
        } else {
            if (fs::path(path).has_parent_path()) {
                fs::create_directories(fs::path(path).parent_path());
            }
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
            if (!*file_) {
                throw DataError("cannot open " + path + " for writing");
            }
            out_ = file_.get();
        }
    }
    std::ostream& get() { return *out_; }
    bool is_stdout() const { return stdout_; }
    void close()
    {
        out_->flush();
        if (!*out_) {
            throw DataError("write failed");
        }
    }

private:
    bool stdout_;
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_ = nullptr;
};

// Prints the machine-readable or the human summary. Summaries move to stderr
// when stdout carries document data.
void report(const Globals& g, const ojson& j, const std::string& human, bool stdout_busy = false)
{
    std::ostream& os = stdout_busy ? std::cerr : std::cout;
    if (g.json) {
        os << j.dump() << '\n';
    } else if (!human.empty()) {
        os << human;
        if (human.back() != '\n') {
            os << '\n';
        }
    }
}

std::string human_from(const ojson& j)
{
    std::ostringstream ss;
    for (const auto& [k, v] : j.items()) {
        ss << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
    return ss.str();
}

template <typename F>
void for_each_doc(std::istream& in, F&& f)
{
    JsonlReader reader(in);
    DocumentRecord doc;
    while (reader.next(doc)) {
        f(doc);
    }
}

nlohmann::json load_json_file(const std::string& path)
{
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

std::size_t doc_batch = 8192;

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"tkmx: BPE vocabulary extension, embedding initialization and corpus preparation"};
    app.require_subcommand(1);
    Globals g;
    app.add_flag("--json", g.json, "Print machine-readable JSON to stdout");
    app.add_option("--threads", g.threads, "Worker threads (outputs do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.fallthrough();

    std::map<CLI::App*, std::function<void()>> actions;

    // ---------------------------------------------------------------- train-bpe
    {
        auto* sub = app.add_subcommand("train-bpe", "Train a byte-level BPE vocabulary on JSONL documents");
        static std::string docs, out, pretok = "gpt2";
        static std::size_t size = 0;
        static std::uint64_t min_freq = 2;
        static std::vector<std::string> specials;
        sub->add_option("--docs", docs, "Input JSONL ('-' for stdin)")->required();
        sub->add_option("--size", size, "Target vocabulary size including specials")->required();
        sub->add_option("--special", specials, "Special token (repeatable)");
        sub->add_option("--pretokenizer", pretok, "gpt2 or qwen2")->capture_default_str();
        sub->add_option("--min-frequency", min_freq, "Minimum pair count")->capture_default_str();
        sub->add_option("--out", out, "Output vocabulary JSON")->required();
        actions[sub] = [&g] {
            const auto p = pretokenizer_from_string(pretok);
            Input in(docs);
            PretokenCounter counter(p);
            std::vector<std::string> batch;
            auto flush = [&] {
                counter.merge(count_pretokens(batch, p, g.threads));
                batch.clear();
            };
            for_each_doc(in.get(), [&](DocumentRecord& d) {
                batch.push_back(std::move(d.text));
                if (batch.size() >= doc_batch) {
                    flush();
                }
            });
            flush();
            TrainOptions opts;
            opts.target_size = size;
            opts.specials = specials;
            opts.min_frequency = min_freq;
            const auto r = train(counter, opts);
            save_vocab(r.vocab, out);
            ojson j{{"size", r.vocab.size()},   {"merges", r.vocab.merges().size()}, {"specials", r.vocab.specials().size()},
                    {"exhausted", r.exhausted}, {"documents", counter.documents()},  {"hash", to_hex(vocab_hash(r.vocab))}};
            report(g, j, human_from(j));
        };
    }

    // ------------------------------------------------------------- import-vocab
    {
        auto* sub = app.add_subcommand("import-vocab", "Convert a tiktoken or Hugging Face vocabulary");
        static std::string tiktoken, hf_vocab, hf_merges, out, pretok = "qwen2";
        static std::vector<std::string> specials;
        auto* tk = sub->add_option("--tiktoken", tiktoken, "tiktoken rank file");
        auto* hv = sub->add_option("--hf-vocab", hf_vocab, "Hugging Face vocab.json");
        auto* hm = sub->add_option("--hf-merges", hf_merges, "Hugging Face merges.txt");
        hv->needs(hm);
        hm->needs(hv);
        tk->excludes(hv);
        sub->add_option("--special", specials, "Special token appended after the regular tokens (repeatable)");
        sub->add_option("--pretokenizer", pretok, "gpt2 or qwen2")->capture_default_str();
        sub->add_option("--out", out, "Output vocabulary JSON")->required();
        actions[sub] = [&g] {
            const auto p = pretokenizer_from_string(pretok);
            if (tiktoken.empty() && hf_vocab.empty()) {
                throw ConfigError("import-vocab needs --tiktoken or --hf-vocab/--hf-merges");
            }
            const auto r = tiktoken.empty() ? import_hf(hf_vocab, hf_merges, specials, p) : import_tiktoken(tiktoken, specials, p);
            save_vocab(r.vocab, out);
            ojson j{{"size", r.vocab.size()},
                    {"declared", r.declared},
                    {"renumbered", r.renumbered},
                    {"split_fallbacks", r.split_fallbacks},
                    {"hash", to_hex(vocab_hash(r.vocab))}};
            report(g, j, human_from(j));
        };
    }

    // ------------------------------------------------------------- extend-vocab
    {
        auto* sub = app.add_subcommand("extend-vocab", "Extend a vocabulary with tokens learned from a corpus");
        static std::string base, corpus, out, report_path;
        static std::size_t n = 32000;
        static bool no_latin_filter = false;
        static std::vector<std::string> langs;
        sub->add_option("--base", base, "Base vocabulary JSON")->required();
        sub->add_option("--corpus", corpus, "Training JSONL ('-' for stdin)")->required();
        sub->add_option("--n", n, "Number of new tokens")->capture_default_str();
        sub->add_option("--langs", langs, "Only use documents of these languages");
        sub->add_flag("--no-latin-filter", no_latin_filter, "Keep non-Latin multi-byte tokens of the base vocabulary");
        sub->add_option("--out", out, "Output vocabulary JSON")->required();
        sub->add_option("--report", report_path, "Write the extension report JSON here");
        actions[sub] = [&g] {
            const auto original = load_vocab(base);
            const std::set<std::string> keep(langs.begin(), langs.end());
            Input in(corpus);
            PretokenCounter counter(original.pretokenizer());
            std::vector<std::string> batch;
            auto flush = [&] {
                counter.merge(count_pretokens(batch, original.pretokenizer(), g.threads));
                batch.clear();
            };
            for_each_doc(in.get(), [&](DocumentRecord& d) {
                if (keep.empty() || keep.contains(d.lang)) {
                    batch.push_back(std::move(d.text));
                    if (batch.size() >= doc_batch) {
                        flush();
                    }
                }
            });
            flush();
            const auto r = extend(original, counter, ExtensionSpec{n, !no_latin_filter});
            audit(no_latin_filter ? original : filter_non_latin(original).vocab, r.vocab, n);
            save_vocab(r.vocab, out);
            auto j = to_json(r.report);
            j.erase("novel_tokens");
            j["documents"] = counter.documents();
            if (!report_path.empty()) {
                write_file(report_path, to_json(r.report).dump(2) + "\n");
            }
            report(g, j, human_from(j));
        };
    }

    // ------------------------------------------------------------- filter-latin
    {
        auto* sub = app.add_subcommand("filter-latin", "Remove multi-byte tokens containing non-Latin letters");
        static std::string vocab, out;
        sub->add_option("--vocab", vocab, "Vocabulary JSON")->required();
        sub->add_option("--out", out, "Output vocabulary JSON")->required();
        actions[sub] = [&g] {
            const auto original = load_vocab(vocab);
            const auto r = filter_non_latin(original);
            save_vocab(r.vocab, out);
            ojson j{{"original_size", original.size()}, {"removed", r.removed.size()}, {"size", r.vocab.size()}};
            report(g, j, human_from(j));
        };
    }

    // ---------------------------------------------------------------- vipi-init
    {
        auto* sub = app.add_subcommand("vipi-init", "Initialize embeddings of an extended vocabulary");
        static std::string base, embeddings, extended, out;
        sub->add_option("--base", base, "Original vocabulary JSON")->required();
        sub->add_option("--embeddings", embeddings, "Embedding matrix of the original vocabulary")->required();
        sub->add_option("--extended", extended, "Extended vocabulary JSON")->required();
        sub->add_option("--out", out, "Output embedding matrix")->required();
        actions[sub] = [&g] {
            const auto original = load_vocab(base);
            const auto emb = load_embeddings(embeddings);
            if (!emb.aligned_with(original)) {
                throw DataError("embedding matrix " + embeddings + " was not built for vocabulary " + base +
                                " (hash or row count mismatch)");
            }
            const auto ext = load_vocab(extended);
            const auto r = vipi_init(original, emb, ext, g.threads);
            save_embeddings(r.embeddings, out);
            ojson j{{"rows", r.embeddings.rows()},
                    {"dim", r.embeddings.dim()},
                    {"inherited", r.report.inherited},
                    {"averaged", r.report.averaged},
                    {"byte_fallback", r.report.byte_fallback.size()}};
            report(g, j, human_from(j));
        };
    }

    // ------------------------------------------------------------------- filter
    {
        auto* sub = app.add_subcommand("filter", "Drop frequent paragraphs and short documents");
        static std::string in_path = "-", out_path = "-";
        static std::size_t min_chars = 500;
        static std::uint64_t threshold = 10;
        static bool no_frequent = false;
        sub->add_option("--in", in_path, "Input JSONL ('-' for stdin)")->capture_default_str();
        sub->add_option("--out", out_path, "Output JSONL ('-' for stdout)")->capture_default_str();
        sub->add_option("--min-chars", min_chars, "Minimum document length in code points")->capture_default_str();
        sub->add_option("--frequent-threshold", threshold, "Drop paragraphs seen more often than this per subset")
            ->capture_default_str();
        sub->add_flag("--no-frequent", no_frequent, "Skip the frequent-paragraph pass (fully streaming)");
        actions[sub] = [&g] {
            Input in(in_path);
            Output out(out_path);
            JsonlWriter writer(out.get());
            FilterStats frequent, length;
            const LengthFilter lf(min_chars);
            auto emit = [&](DocumentRecord& d) {
                ++length.in_docs;
                if (lf.keep(d)) {
                    ++length.out_docs;
                    writer.write(d);
                } else {
                    ++length.dropped_short;
                }
            };
            if (no_frequent) {
                for_each_doc(in.get(), emit);
            } else {
                // Two passes need the whole input in memory.
                auto docs = read_documents(in.get());
                for (auto& d : drop_frequent_paragraphs(std::move(docs), threshold, frequent)) {
                    emit(d);
                }
            }
            out.close();
            ojson j{{"frequent", to_json(frequent)}, {"length", to_json(length)}};
            report(g, j, "kept " + std::to_string(length.out_docs) + " of " +
                             std::to_string(no_frequent ? length.in_docs : frequent.in_docs) + " documents",
                   out.is_stdout());
        };
    }

    // -------------------------------------------------------------------- dedup
    {
        auto* sub = app.add_subcommand("dedup", "Exact document and n-gram paragraph deduplication");
        static std::string in_path = "-", out_path = "-";
        static std::size_t ngram = 13, min_chars = 0;
        static bool exact = false;
        sub->add_option("--in", in_path, "Input JSONL ('-' for stdin)")->capture_default_str();
        sub->add_option("--out", out_path, "Output JSONL ('-' for stdout)")->capture_default_str();
        sub->add_option("--ngram", ngram, "Whitespace-token n-gram length")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_flag("--exact", exact, "Keep n-grams verbatim instead of hashing them");
        sub->add_option("--min-chars", min_chars, "Re-apply a length filter after paragraph removal")->capture_default_str();
        actions[sub] = [&g] {
            Input in(in_path);
            Output out(out_path);
            JsonlWriter writer(out.get());
            DocumentDeduplicator docs;
            ParagraphDeduplicator paras(ParagraphDedupOptions{ngram, exact});
            const LengthFilter lf(min_chars);
            FilterStats stats;
            for_each_doc(in.get(), [&](DocumentRecord& d) {
                ++stats.in_docs;
                if (!docs.admit(d)) {
                    ++stats.dropped_dup_doc;
                } else if (!paras.process(d, stats)) {
                    ++stats.dropped_dup_para;
                } else if (!lf.keep(d)) {
                    ++stats.dropped_short;
                } else {
                    ++stats.out_docs;
                    writer.write(d);
                }
            });
            out.close();
            report(g, to_json(stats),
                   "kept " + std::to_string(stats.out_docs) + " of " + std::to_string(stats.in_docs) + " documents",
                   out.is_stdout());
        };
    }

    // -------------------------------------------------------------------- split
    {
        auto* sub = app.add_subcommand("split", "Language-stratified validation/test split");
        static std::string in_path, train_path, valid_path, test_path, config;
        static std::optional<std::size_t> valid_size, test_size;
        static std::optional<std::string> stratify;
        static std::optional<std::uint64_t> seed;
        sub->add_option("--in", in_path, "Input JSONL (read twice, so not stdin)")->required();
        sub->add_option("--train", train_path, "Training output JSONL")->required();
        sub->add_option("--valid", valid_path, "Validation output JSONL")->required();
        sub->add_option("--test", test_path, "Test output JSONL")->required();
        sub->add_option("--config", config, "SplitSpec JSON");
        sub->add_option("--valid-size", valid_size, "Validation documents (default 10000)");
        sub->add_option("--test-size", test_size, "Test documents (default 10000)");
        sub->add_option("--stratify-by", stratify, "lang or subset");
        sub->add_option("--seed", seed, "Selection seed");
        actions[sub] = [&g] {
            SplitSpec spec = config.empty() ? SplitSpec{} : SplitSpec::from_json(load_json_file(config));
            if (valid_size) spec.valid_size = *valid_size;
            if (test_size) spec.test_size = *test_size;
            if (stratify) spec.stratify_by = *stratify;
            if (seed) spec.seed = *seed;
            SplitPlanner planner(spec);
            {
                Input in(in_path);
                for_each_doc(in.get(), [&](DocumentRecord& d) { planner.observe(d); });
            }
            planner.finalize();
            Output train_out(train_path), valid_out(valid_path), test_out(test_path);
            JsonlWriter tw(train_out.get()), vw(valid_out.get()), sw(test_out.get());
            Input in(in_path);
            for_each_doc(in.get(), [&](DocumentRecord& d) {
                switch (planner.route(d)) {
                case SplitPart::train: tw.write(d); break;
                case SplitPart::valid: vw.write(d); break;
                case SplitPart::test: sw.write(d); break;
                }
            });
            train_out.close();
            valid_out.close();
            test_out.close();
            ojson j{{"train", tw.written()},
                    {"valid", vw.written()},
                    {"test", sw.written()},
                    {"valid_allocation", planner.valid_allocation()},
                    {"test_allocation", planner.test_allocation()}};
            report(g, j, human_from(j));
        };
    }

    // ---------------------------------------------------------------------- mix
    {
        auto* sub = app.add_subcommand("mix", "Oversample subsets by weight");
        static std::string in_path = "-", out_path = "-", config;
        static std::optional<std::uint64_t> seed;
        sub->add_option("--in", in_path, "Input JSONL ('-' for stdin)")->capture_default_str();
        sub->add_option("--out", out_path, "Output JSONL ('-' for stdout)")->capture_default_str();
        sub->add_option("--config", config, "MixtureSpec JSON (default: news 2, wikipedia 3, subtitles 2, academic 1.5)");
        sub->add_option("--seed", seed, "Seed for fractional weights");
        actions[sub] = [&g] {
            MixtureSpec spec = config.empty() ? MixtureSpec::hungarian_defaults() : MixtureSpec::from_json(load_json_file(config));
            if (seed) spec.seed = *seed;
            const Oversampler sampler(spec);
            Input in(in_path);
            Output out(out_path);
            JsonlWriter writer(out.get());
            std::uint64_t docs_in = 0;
            for_each_doc(in.get(), [&](DocumentRecord& d) {
                ++docs_in;
                sampler.emit(d, [&](const DocumentRecord& c) { writer.write(c); });
            });
            out.close();
            ojson j{{"documents_in", docs_in}, {"documents_out", writer.written()}};
            report(g, j, human_from(j), out.is_stdout());
        };
    }

    // --------------------------------------------------------------------- pack
    {
        auto* sub = app.add_subcommand("pack", "Tokenize documents and pack them into fixed-size windows");
        static std::string vocab, in_path = "-", out_path, spans_path, delimiter = "<|endoftext|>", policy = "split";
        static std::size_t window = 4096;
        sub->add_option("--vocab", vocab, "Vocabulary JSON")->required();
        sub->add_option("--in", in_path, "Input JSONL ('-' for stdin)")->capture_default_str();
        sub->add_option("--window", window, "Window length L")->capture_default_str();
        sub->add_option("--long-doc", policy, "split or drop")->capture_default_str();
        sub->add_option("--delimiter", delimiter, "Special token framing documents")->capture_default_str();
        sub->add_option("--out", out_path, "Output shard (.tkpk)")->required();
        sub->add_option("--spans", spans_path, "Provenance sidecar JSONL (default: <out>.spans.jsonl)");
        actions[sub] = [&g] {
            const auto v = load_vocab(vocab);
            const auto delim = v.find_special(delimiter);
            if (!delim) {
                throw ConfigError("delimiter '" + delimiter + "' is not a special token of " + vocab);
            }
            const PackerConfig cfg{window, *delim, long_doc_policy_from_string(policy)};
            cfg.validate(v);
            ShardWriter shard(out_path, static_cast<std::uint32_t>(window));
            Output spans(spans_path.empty() ? out_path + ".spans.jsonl" : spans_path);
            std::size_t index = 0;
            Packer packer(cfg, v.size(), [&](PackedWindow&& w) {
                shard.write(w.ids);
                spans.get() << spans_to_jsonl(index++, w) << '\n';
            });
            CachingEncoder enc(v);
            Input in(in_path);
            for_each_doc(in.get(), [&](DocumentRecord& d) { packer.push({d.id, enc.encode(d.text)}); });
            packer.finish();
            shard.close();
            spans.close();
            auto j = to_json(packer.stats());
            j["mean_fill"] = packer.stats().mean_fill(window);
            report(g, j, human_from(j));
        };
    }

    // ------------------------------------------------------------------- unpack
    {
        auto* sub = app.add_subcommand("unpack", "Recover token lists from a packed shard");
        static std::string vocab, in_path, out_path = "-", delimiter = "<|endoftext|>";
        static bool decode_text = false;
        sub->add_option("--vocab", vocab, "Vocabulary JSON")->required();
        sub->add_option("--in", in_path, "Packed shard")->required();
        sub->add_option("--out", out_path, "Output JSONL ('-' for stdout)")->capture_default_str();
        sub->add_option("--delimiter", delimiter, "Special token framing documents")->capture_default_str();
        sub->add_flag("--decode", decode_text, "Also emit the decoded text");
        actions[sub] = [&g] {
            const auto v = load_vocab(vocab);
            const auto delim = v.find_special(delimiter);
            if (!delim) {
                throw ConfigError("delimiter '" + delimiter + "' is not a special token of " + vocab);
            }
            ShardReader reader(in_path);
            Output out(out_path);
            std::vector<TokenId> ids;
            std::vector<std::vector<TokenId>> docs;
            std::size_t windows = 0, index = 0;
            while (reader.next(ids)) {
                ++windows;
                docs.clear();
                unpack_window(ids, *delim, docs);
                for (const auto& d : docs) {
                    ojson line{{"index", index++}, {"ids", d}};
                    if (decode_text) {
                        line["text"] = decode(v, d, true);
                    }
                    out.get() << line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
                }
            }
            out.close();
            ojson j{{"windows", windows}, {"documents", index}};
            report(g, j, human_from(j), out.is_stdout());
        };
    }

    // ---------------------------------------------------------------- fertility
    {
        auto* sub = app.add_subcommand("fertility", "Compare tokens per whitespace word of two vocabularies");
        static std::string base, adapted, docs_path, mode = "corpus", base_name, adapted_name;
        sub->add_option("--base", base, "Base vocabulary JSON")->required();
        sub->add_option("--adapted", adapted, "Adapted vocabulary JSON")->required();
        sub->add_option("--docs", docs_path, "Evaluation JSONL ('-' for stdin)")->required();
        sub->add_option("--mode", mode, "corpus (total tokens / total words) or document (mean per document)")
            ->capture_default_str();
        sub->add_option("--base-name", base_name, "Column name for the base vocabulary");
        sub->add_option("--adapted-name", adapted_name, "Column name for the adapted vocabulary");
        actions[sub] = [&g] {
            FertilityMode m;
            if (mode == "corpus") {
                m = FertilityMode::corpus;
            } else if (mode == "document") {
                m = FertilityMode::document;
            } else {
                throw ConfigError("--mode must be corpus or document");
            }
            const auto b = load_vocab(base);
            const auto a = load_vocab(adapted);
            std::map<std::string, std::vector<std::string>> by_lang;
            Input in(docs_path);
            for_each_doc(in.get(), [&](DocumentRecord& d) { by_lang[d.lang].push_back(std::move(d.text)); });
            if (by_lang.empty()) {
                throw DataError("no documents in " + docs_path);
            }
            auto r = compare(b, a, by_lang, m, g.threads);
            r.base_name = base_name.empty() ? fs::path(base).stem().string() : base_name;
            r.adapted_name = adapted_name.empty() ? fs::path(adapted).stem().string() : adapted_name;
            report(g, r.to_json(), r.to_table());
        };
    }

    // ------------------------------------------------------------------- report
    {
        auto* sub = app.add_subcommand("report", "Per language/subset document and token composition");
        static std::string vocab, in_path = "-", label = "pre-oversampling";
        sub->add_option("--vocab", vocab, "Vocabulary JSON")->required();
        sub->add_option("--in", in_path, "Input JSONL ('-' for stdin)")->capture_default_str();
        sub->add_option("--label", label, "Stage label, e.g. pre-oversampling or post-oversampling")
            ->capture_default_str();
        actions[sub] = [&g] {
            const auto v = load_vocab(vocab);
            CompositionReport r;
            r.label = label;
            CachingEncoder enc(v);
            Input in(in_path);
            for_each_doc(in.get(), [&](DocumentRecord& d) { r.add(d.lang, d.subset, 1, enc.count(d.text)); });
            report(g, r.to_json(), r.to_table());
        };
    }

    // ---------------------------------------------------------------------- run
    {
        auto* sub = app.add_subcommand("run", "Run the end-to-end recipe with resumable stages");
        static std::string config, workspace;
        static bool force = false;
        sub->add_option("--config", config, "Recipe JSON")->required();
        sub->add_option("--workspace", workspace, "Workspace root (default: $TKMX_WORKSPACE or the current directory)");
        sub->add_flag("--force", force, "Rebuild stages whose recorded outputs were modified");
        actions[sub] = [&g] {
            const auto recipe = RecipeConfig::from_json(load_json_file(config));
            RunOptions opts;
            opts.workspace = resolve_workspace(workspace.empty() ? std::nullopt : std::optional<fs::path>(workspace));
            opts.force = force;
            opts.threads = g.threads;
            const auto r = run(recipe, opts);
            ojson j{{"executed", r.executed}, {"skipped", r.skipped}, {"manifest", r.manifest}};
            std::ostringstream human;
            for (const auto& s : stage_names()) {
                const bool ran = std::find(r.executed.begin(), r.executed.end(), s) != r.executed.end();
                human << s << ": " << (ran ? "executed" : "skipped (up to date)") << '\n';
            }
            report(g, j, human.str());
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        for (const auto& [sub, action] : actions) {
            if (sub->parsed()) {
                action();
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "tkmx: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "tkmx: error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
