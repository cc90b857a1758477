#include "tkmx/corpus_filter.hpp"

#include "tkmx/hash.hpp"
#include "tkmx/unicode.hpp"

#include <cstring>

namespace tkmx {

nlohmann::ordered_json to_json(const FilterStats& stats)
{
    nlohmann::ordered_json j;
    j["in_docs"] = stats.in_docs;
    j["out_docs"] = stats.out_docs;
    j["dropped_short"] = stats.dropped_short;
    j["dropped_dup_doc"] = stats.dropped_dup_doc;
    j["dropped_dup_para"] = stats.dropped_dup_para;
    j["dropped_frequent_para"] = stats.dropped_frequent_para;
    j["paragraphs_seen"] = stats.paragraphs_seen;
    j["paragraphs_dropped_dup"] = stats.paragraphs_dropped_dup;
    j["paragraphs_dropped_frequent"] = stats.paragraphs_dropped_frequent;
    return j;
}

namespace {

bool is_blank(std::string_view line)
{
    std::size_t pos = 0;
    while (pos < line.size()) {
        if (!unicode::is_whitespace(unicode::next_code_point(line, pos))) {
            return false;
        }
    }
    return true;
}

void absorb_drops(FilterStats& into, const FilterStats& from)
{
    into.dropped_short += from.dropped_short;
    into.dropped_dup_doc += from.dropped_dup_doc;
    into.dropped_dup_para += from.dropped_dup_para;
    into.dropped_frequent_para += from.dropped_frequent_para;
    into.paragraphs_seen += from.paragraphs_seen;
    into.paragraphs_dropped_dup += from.paragraphs_dropped_dup;
    into.paragraphs_dropped_frequent += from.paragraphs_dropped_frequent;
}

std::uint64_t key_hash(std::string_view key)
{
    return mix64(fnv1a64(key));
}

} // namespace

std::vector<ParagraphSpan> split_paragraphs(std::string_view text)
{
    std::vector<ParagraphSpan> spans;
    std::size_t line_start = 0;
    bool open = false;
    ParagraphSpan current;
    while (line_start <= text.size()) {
        auto nl = text.find('\n', line_start);
        const std::size_t line_end = nl == std::string_view::npos ? text.size() : nl;
        const auto line = text.substr(line_start, line_end - line_start);
        if (is_blank(line)) {
            if (open) {
                spans.push_back(current);
                open = false;
            }
        } else {
            if (!open) {
                current.begin = line_start;
                open = true;
            }
            current.end = line_end;
        }
        if (nl == std::string_view::npos) {
            break;
        }
        line_start = nl + 1;
    }
    if (open) {
        spans.push_back(current);
    }
    return spans;
}

std::string remove_paragraphs(std::string_view text, const std::vector<ParagraphSpan>& spans,
                              const std::vector<bool>& keep)
{
    if (spans.empty()) {
        return std::string(text);
    }
    std::string out(text.substr(0, spans.front().begin));
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (!keep[i]) {
            continue;
        }
        const std::size_t end = i + 1 < spans.size() ? spans[i + 1].begin : text.size();
        out.append(text.substr(spans[i].begin, end - spans[i].begin));
    }
    return out;
}

bool LengthFilter::keep(const DocumentRecord& doc) const
{
    if (doc.text.size() < min_chars_) {
        return false; // fewer bytes than code points needed
    }
    return unicode::code_point_count(doc.text) >= min_chars_;
}

bool DocumentDeduplicator::admit(const DocumentRecord& doc)
{
    const auto digest = sha256(unicode::normalize_for_dedup(doc.text));
    std::array<std::uint64_t, 2> key{};
    std::memcpy(key.data(), digest.data(), sizeof(key));
    return seen_.insert(key).second;
}

bool ParagraphDeduplicator::seen(const std::string& key) const
{
    return options_.exact ? exact_.contains(key) : hashed_.contains(key_hash(key));
}

void ParagraphDeduplicator::add(const std::string& key)
{
    if (options_.exact) {
        exact_.insert(key);
    } else {
        hashed_.insert(key_hash(key));
    }
}

bool ParagraphDeduplicator::process(DocumentRecord& doc, FilterStats& stats)
{
    const auto spans = split_paragraphs(doc.text);
    std::vector<bool> keep(spans.size(), true);
    std::size_t kept = 0;
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        ++stats.paragraphs_seen;
        const auto text = unicode::nfc(std::string_view(doc.text).substr(spans[i].begin, spans[i].end - spans[i].begin));
        const auto tokens = unicode::split_whitespace(text);
        keys.clear();
        if (tokens.size() < options_.ngram) {
            // Short paragraphs live in their own key space.
            keys.push_back("\x01" + unicode::collapse_whitespace(text));
        } else {
            for (std::size_t s = 0; s + options_.ngram <= tokens.size(); ++s) {
                std::string gram;
                for (std::size_t t = 0; t < options_.ngram; ++t) {
                    if (t > 0) {
                        gram.push_back(' ');
                    }
                    gram.append(tokens[s + t]);
                }
                keys.push_back(std::move(gram));
            }
        }
        bool duplicate = false;
        for (const auto& k : keys) {
            if (seen(k)) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            keep[i] = false;
            ++stats.paragraphs_dropped_dup;
            continue;
        }
        for (const auto& k : keys) {
            add(k);
        }
        ++kept;
    }
    if (kept == 0 && !spans.empty()) {
        return false;
    }
    if (kept != spans.size()) {
        doc.text = remove_paragraphs(doc.text, spans, keep);
    }
    return true;
}

void FrequentParagraphFilter::count(const DocumentRecord& doc)
{
    auto& table = counts_[doc.subset];
    for (const auto& span : split_paragraphs(doc.text)) {
        ++table[key_hash(unicode::normalize_for_dedup(
            std::string_view(doc.text).substr(span.begin, span.end - span.begin)))];
    }
}

bool FrequentParagraphFilter::apply(DocumentRecord& doc, FilterStats& stats) const
{
    const auto spans = split_paragraphs(doc.text);
    const auto table = counts_.find(doc.subset);
    std::vector<bool> keep(spans.size(), true);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        ++stats.paragraphs_seen;
        std::uint64_t n = 0;
        if (table != counts_.end()) {
            const auto key = key_hash(unicode::normalize_for_dedup(
                std::string_view(doc.text).substr(spans[i].begin, spans[i].end - spans[i].begin)));
            if (const auto it = table->second.find(key); it != table->second.end()) {
                n = it->second;
            }
        }
        if (n > threshold_) {
            keep[i] = false;
            ++stats.paragraphs_dropped_frequent;
        } else {
            ++kept;
        }
    }
    if (kept == 0 && !spans.empty()) {
        return false;
    }
    if (kept != spans.size()) {
        doc.text = remove_paragraphs(doc.text, spans, keep);
    }
    return true;
}

std::vector<DocumentRecord> length_filter(std::vector<DocumentRecord> docs, std::size_t min_chars, FilterStats& stats)
{
    const LengthFilter filter(min_chars);
    std::vector<DocumentRecord> out;
    stats.in_docs += docs.size();
    for (auto& d : docs) {
        if (filter.keep(d)) {
            out.push_back(std::move(d));
        } else {
            ++stats.dropped_short;
        }
    }
    stats.out_docs += out.size();
    return out;
}

std::vector<DocumentRecord> dedup_documents(std::vector<DocumentRecord> docs, FilterStats& stats)
{
    DocumentDeduplicator dedup;
    std::vector<DocumentRecord> out;
    stats.in_docs += docs.size();
    for (auto& d : docs) {
        if (dedup.admit(d)) {
            out.push_back(std::move(d));
        } else {
            ++stats.dropped_dup_doc;
        }
    }
    stats.out_docs += out.size();
    return out;
}

std::vector<DocumentRecord> dedup_paragraphs(std::vector<DocumentRecord> docs, FilterStats& stats,
                                             ParagraphDedupOptions options)
{
    ParagraphDeduplicator dedup(options);
    std::vector<DocumentRecord> out;
    stats.in_docs += docs.size();
    for (auto& d : docs) {
        if (dedup.process(d, stats)) {
            out.push_back(std::move(d));
        } else {
            ++stats.dropped_dup_para;
        }
    }
    stats.out_docs += out.size();
    return out;
}

std::vector<DocumentRecord> drop_frequent_paragraphs(std::vector<DocumentRecord> docs, std::uint64_t threshold,
                                                     FilterStats& stats)
{
    FrequentParagraphFilter filter(threshold);
    for (const auto& d : docs) {
        filter.count(d);
    }
    std::vector<DocumentRecord> out;
    stats.in_docs += docs.size();
    for (auto& d : docs) {
        if (filter.apply(d, stats)) {
            out.push_back(std::move(d));
        } else {
            ++stats.dropped_frequent_para;
        }
    }
    stats.out_docs += out.size();
    return out;
}

std::vector<DocumentRecord> run_filter_chain(std::vector<DocumentRecord> docs, const FilterChainOptions& options,
                                             FilterStats& stats)
{
    stats.in_docs += docs.size();
    FilterStats step;
    docs = drop_frequent_paragraphs(std::move(docs), options.frequent_threshold, step);
    docs = dedup_documents(std::move(docs), step);
    docs = dedup_paragraphs(std::move(docs), step, options.paragraph);
    docs = length_filter(std::move(docs), options.min_chars, step);
    absorb_drops(stats, step);
    stats.out_docs += docs.size();
    return docs;
}

} // namespace tkmx
