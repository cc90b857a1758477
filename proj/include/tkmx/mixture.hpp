#pragma once

#include "tkmx/document.hpp"
#include "tkmx/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace tkmx {

struct MixtureSpec {
    std::map<std::string, double> weights;
    std::uint64_t seed = 0;

    // news 2.0, wikipedia 3.0, subtitles 2.0, academic 1.5.
    static MixtureSpec hungarian_defaults();
    static MixtureSpec from_json(const nlohmann::json& j);

    // Unknown subsets weigh 1.0.
    double weight(const std::string& subset) const;
    // Throws ConfigError for non-positive or non-finite weights.
    void validate() const;
};

// Emits floor(w) copies of each document plus one more with probability
// frac(w), drawn from a seeded hash of the document id. The first copy keeps
// its id; copy i >= 1 is suffixed "#i".
class Oversampler {
public:
    explicit Oversampler(MixtureSpec spec);

    std::size_t copies(const DocumentRecord& doc) const;
    void emit(const DocumentRecord& doc, const std::function<void(const DocumentRecord&)>& sink) const;

private:
    MixtureSpec spec_;
};

std::vector<DocumentRecord> oversample(const std::vector<DocumentRecord>& docs, const MixtureSpec& spec);

struct SplitSpec {
    std::size_t valid_size = 10000;
    std::size_t test_size = 10000;
    // "lang" or "subset".
    std::string stratify_by = "lang";
    std::uint64_t seed = 0;

    static SplitSpec from_json(const nlohmann::json& j);
};

// Largest-remainder allocation of `size` over strata proportional to their
// document counts; ties go to the lexicographically smaller stratum.
std::map<std::string, std::size_t> proportional_allocation(const std::map<std::string, std::size_t>& counts,
                                                           std::size_t size);

enum class SplitPart { train, valid, test };

// Two-pass stratified splitter with memory bounded by
// strata * (valid_size + test_size). Within a stratum, documents are ranked
// by a seeded hash of their id; the lowest ranks go to validation, the next
// ones to test.
class SplitPlanner {
public:
    explicit SplitPlanner(SplitSpec spec);

    void observe(const DocumentRecord& doc);
    // Throws DataError naming the stratum that cannot fill its share.
    void finalize();
    SplitPart route(const DocumentRecord& doc) const;

    const std::map<std::string, std::size_t>& counts() const { return counts_; }
    const std::map<std::string, std::size_t>& valid_allocation() const { return valid_alloc_; }
    const std::map<std::string, std::size_t>& test_allocation() const { return test_alloc_; }

private:
    struct Ranked {
        std::uint64_t hash;
        std::string id;
        bool operator<(const Ranked& o) const { return hash != o.hash ? hash < o.hash : id < o.id; }
    };

    SplitSpec spec_;
    std::map<std::string, std::size_t> counts_;
    std::map<std::string, std::vector<Ranked>> best_; // max-heaps
    std::map<std::string, std::size_t> valid_alloc_;
    std::map<std::string, std::size_t> test_alloc_;
    std::unordered_set<std::string> valid_ids_;
    std::unordered_set<std::string> test_ids_;
    bool finalized_ = false;

    const std::string& key(const DocumentRecord& doc) const;
};

struct SplitResult {
    std::vector<DocumentRecord> train;
    std::vector<DocumentRecord> valid;
    std::vector<DocumentRecord> test;
};

SplitResult split(const std::vector<DocumentRecord>& docs, const SplitSpec& spec);

struct CompositionCell {
    std::string lang;
    std::string subset;
    std::uint64_t documents = 0;
    std::uint64_t tokens = 0;
    double percent = 0.0;
};

// Per (language, subset) document and token accounting. Subsets named
// "dataset/part" are also summed per dataset; percentages are shares of the
// grand token total.
class CompositionReport {
public:
    void add(const std::string& lang, const std::string& subset, std::uint64_t documents, std::uint64_t tokens);

    // Same as add() but with token counts given in arbitrary real units (e.g.
    // millions) for reports built from published tables.
    void add_scaled(const std::string& lang, const std::string& subset, std::uint64_t documents, double tokens);

    std::vector<CompositionCell> cells() const;
    std::map<std::string, double> language_percent() const;
    std::map<std::string, double> dataset_percent() const;
    double total_tokens() const;
    std::uint64_t total_documents() const;

    std::string label = "pre-oversampling";

    nlohmann::ordered_json to_json() const;
    std::string to_table() const;

private:
    struct Acc {
        std::uint64_t documents = 0;
        double tokens = 0.0;
    };
    std::map<std::pair<std::string, std::string>, Acc> cells_;
};

CompositionReport compose_report(const std::vector<DocumentRecord>& docs, const Vocabulary& vocab,
                                 std::size_t threads = 1);

} // namespace tkmx
