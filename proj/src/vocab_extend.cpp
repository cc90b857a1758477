#include "tkmx/vocab_extend.hpp"

#include "tkmx/error.hpp"
#include "tkmx/unicode.hpp"

#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tkmx {

bool is_non_latin_token(std::string_view bytes)
{
    if (bytes.size() < 2) {
        return false;
    }
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (unicode::is_non_latin_letter(unicode::next_code_point(bytes, pos))) {
            return true;
        }
    }
    return false;
}

NonLatinFilterResult filter_non_latin(const Vocabulary& vocab)
{
    const auto& tokens = vocab.tokens();
    std::vector<bool> keep(vocab.num_regular(), true);
    std::vector<TokenId> remap(vocab.num_regular(), 0);
    NonLatinFilterResult result;
    std::vector<MergeRule> merges;
    for (TokenId id = 0; id < kNumBaseTokens; ++id) {
        remap[id] = id;
    }
    TokenId next_id = kNumBaseTokens;
    for (std::size_t rank = 0; rank < vocab.merges().size(); ++rank) {
        const auto id = static_cast<TokenId>(kNumBaseTokens + rank);
        const auto& m = vocab.merges()[rank];
        if (!keep[m.left] || !keep[m.right] || is_non_latin_token(tokens[id])) {
            keep[id] = false;
            result.removed.push_back(tokens[id]);
            continue;
        }
        remap[id] = next_id++;
        merges.push_back({remap[m.left], remap[m.right]});
    }
    result.vocab = Vocabulary(vocab.base_order(), std::move(merges), vocab.specials(), vocab.pretokenizer());
    return result;
}

nlohmann::ordered_json to_json(const ExtensionReport& report)
{
    nlohmann::ordered_json j;
    j["original_size"] = report.original_size;
    j["m"] = report.m;
    j["n"] = report.n;
    j["removed_non_latin"] = report.removed_non_latin;
    j["k"] = report.k ? nlohmann::ordered_json(*report.k) : nlohmann::ordered_json(nullptr);
    j["final_size"] = report.final_size;
    j["rederived_merges"] = report.rederived_merges;
    j["novel_tokens"] = report.novel_tokens;
    return j;
}

ExtensionResult extend(const Vocabulary& original, const PretokenCounter& corpus, const ExtensionSpec& spec)
{
    ExtensionResult out;
    out.report.original_size = original.size();
    out.report.n = spec.n;

    Vocabulary base = original;
    if (spec.latin_filter) {
        auto filtered = filter_non_latin(original);
        out.report.removed_non_latin = filtered.removed.size();
        base = std::move(filtered.vocab);
    }
    const std::size_t m = base.size();
    out.report.m = m;
    if (spec.n == 0) {
        out.report.final_size = m;
        out.vocab = std::move(base);
        return out;
    }
    if (corpus.pretokenizer() != base.pretokenizer()) {
        throw ConfigError("extension corpus was pre-tokenized with '" + std::string(to_string(corpus.pretokenizer())) +
                          "' but the vocabulary uses '" + std::string(to_string(base.pretokenizer())) + "'");
    }

    // Train V' of size m + n. Only its prefix up to the n-th novel token is
    // used, so training stops there.
    std::size_t novel = 0;
    TrainOptions options;
    options.target_size = m + spec.n;
    options.base_order = base.base_order();
    options.on_merge = [&](std::string_view bytes) {
        if (!base.find_regular(bytes)) {
            ++novel;
        }
        return novel < spec.n;
    };
    const auto trained = train(corpus, options).vocab;
    if (novel < spec.n) {
        throw ExtensionError("extension corpus minted only " + std::to_string(novel) + " of " +
                                 std::to_string(spec.n) + " novel tokens",
                             novel);
    }
    const std::size_t k = trained.size() - 1;
    out.report.k = k;

    // V'[:k+1] followed by V'' (original tokens not in the prefix, in
    // original order; specials stay last).
    std::vector<MergeRule> merges(trained.merges().begin(), trained.merges().end());
    std::unordered_map<std::string, TokenId> index;
    for (TokenId id = 0; id <= k; ++id) {
        index.emplace(trained.tokens()[id], id);
        if (!base.find_regular(trained.tokens()[id])) {
            out.report.novel_tokens.push_back(id);
        }
    }
    for (std::size_t rank = 0; rank < base.merges().size(); ++rank) {
        const auto id = static_cast<TokenId>(kNumBaseTokens + rank);
        const auto& bytes = base.tokens()[id];
        if (index.contains(bytes)) {
            continue;
        }
        const auto produced = static_cast<TokenId>(kNumBaseTokens + merges.size());
        const auto& rule = base.merges()[rank];
        const auto left = index.find(base.tokens()[rule.left]);
        const auto right = index.find(base.tokens()[rule.right]);
        if (left != index.end() && right != index.end()) {
            merges.push_back({left->second, right->second});
        } else {
            // Longest surviving left part whose remainder also survives.
            bool found = false;
            for (std::size_t cut = bytes.size() - 1; cut >= 1 && !found; --cut) {
                const auto l = index.find(bytes.substr(0, cut));
                const auto r = index.find(bytes.substr(cut));
                if (l != index.end() && r != index.end()) {
                    merges.push_back({l->second, r->second});
                    found = true;
                }
            }
            if (!found) {
                throw ExtensionError("inherited token " + std::to_string(id) + " has no derivation in the result",
                                     novel);
            }
            ++out.report.rederived_merges;
        }
        index.emplace(bytes, produced);
    }
    out.vocab = Vocabulary(base.base_order(), std::move(merges), base.specials(), base.pretokenizer());
    out.report.final_size = out.vocab.size();
    if (out.report.final_size != m + spec.n) {
        throw ExtensionError("extended vocabulary has " + std::to_string(out.report.final_size) +
                                 " tokens, expected " + std::to_string(m + spec.n),
                             novel);
    }
    return out;
}

ExtensionReport audit(const Vocabulary& original, const Vocabulary& extended, std::optional<std::size_t> expected_n)
{
    auto original_id = [&](TokenId id) -> std::optional<TokenId> {
        const auto& bytes = extended.tokens()[id];
        return extended.is_special(id) ? original.find_special(bytes) : original.find_regular(bytes);
    };

    ExtensionReport report;
    report.original_size = original.size();
    report.m = original.size();
    report.final_size = extended.size();
    for (TokenId id = 0; id < extended.size(); ++id) {
        if (!original_id(id)) {
            report.novel_tokens.push_back(id);
        }
    }
    report.n = report.novel_tokens.size();
    if (!report.novel_tokens.empty()) {
        report.k = report.novel_tokens.back();
    }

    std::vector<std::string> problems;
    if (expected_n && *expected_n != report.n) {
        problems.push_back("novelty count: expected " + std::to_string(*expected_n) + " novel tokens, found " +
                           std::to_string(report.n));
    }
    if (extended.size() != original.size() + report.n) {
        problems.push_back("size identity: |extended| = " + std::to_string(extended.size()) + " but m + n = " +
                           std::to_string(original.size()) + " + " + std::to_string(report.n));
    }
    const std::size_t tail_start = report.k ? *report.k + 1 : 0;
    std::optional<TokenId> last;
    std::size_t listed = 0;
    for (std::size_t id = tail_start; id < extended.size(); ++id) {
        const auto orig = original_id(static_cast<TokenId>(id));
        if (last && orig && *orig < *last) {
            if (listed++ < 8) {
                problems.push_back("order violation: token " + std::to_string(id) + " (original id " +
                                   std::to_string(*orig) + ") follows original id " + std::to_string(*last));
            }
        }
        if (orig) {
            last = orig;
        }
    }
    if (!problems.empty()) {
        std::ostringstream ss;
        ss << "extension audit failed:";
        for (const auto& p : problems) {
            ss << "\n  " << p;
        }
        throw AuditError(ss.str());
    }
    return report;
}

} // namespace tkmx
