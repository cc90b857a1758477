#include "tkmx/mixture.hpp"

#include "tkmx/bpe.hpp"
#include "tkmx/error.hpp"
#include "tkmx/format.hpp"
#include "tkmx/hash.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

namespace tkmx {

// ---------------------------------------------------------------------------
// Oversampling

MixtureSpec MixtureSpec::hungarian_defaults()
{
    MixtureSpec spec;
    spec.weights = {{"news", 2.0}, {"wikipedia", 3.0}, {"subtitles", 2.0}, {"academic", 1.5}};
    return spec;
}

MixtureSpec MixtureSpec::from_json(const nlohmann::json& j)
{
    MixtureSpec spec;
    try {
        if (j.contains("weights")) {
            spec.weights = j.at("weights").get<std::map<std::string, double>>();
        }
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid mixture spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

double MixtureSpec::weight(const std::string& subset) const
{
    const auto it = weights.find(subset);
    return it == weights.end() ? 1.0 : it->second;
}

void MixtureSpec::validate() const
{
    for (const auto& [subset, w] : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ConfigError("weight of subset '" + subset + "' must be positive and finite");
        }
    }
}

Oversampler::Oversampler(MixtureSpec spec) : spec_(std::move(spec))
{
    spec_.validate();
}

std::size_t Oversampler::copies(const DocumentRecord& doc) const
{
    const double w = spec_.weight(doc.subset);
    const double whole = std::floor(w);
    const double frac = w - whole;
    auto n = static_cast<std::size_t>(whole);
    if (frac > 0.0 && unit_interval(seeded_hash(spec_.seed, doc.id)) < frac) {
        ++n;
    }
    return n;
}

void Oversampler::emit(const DocumentRecord& doc, const std::function<void(const DocumentRecord&)>& sink) const
{
    const std::size_t n = copies(doc);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            sink(doc);
        } else {
            DocumentRecord copy = doc;
            copy.id += "#" + std::to_string(i);
            sink(copy);
        }
    }
}

std::vector<DocumentRecord> oversample(const std::vector<DocumentRecord>& docs, const MixtureSpec& spec)
{
    const Oversampler sampler(spec);
    std::vector<DocumentRecord> out;
    for (const auto& d : docs) {
        sampler.emit(d, [&](const DocumentRecord& c) { out.push_back(c); });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stratified split

SplitSpec SplitSpec::from_json(const nlohmann::json& j)
{
    SplitSpec spec;
    try {
        spec.valid_size = j.value("valid_size", spec.valid_size);
        spec.test_size = j.value("test_size", spec.test_size);
        spec.stratify_by = j.value("stratify_by", spec.stratify_by);
        spec.seed = j.value("seed", spec.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid split spec: ") + e.what());
    }
    if (spec.stratify_by != "lang" && spec.stratify_by != "subset") {
        throw ConfigError("stratify_by must be 'lang' or 'subset'");
    }
    return spec;
}

std::map<std::string, std::size_t> proportional_allocation(const std::map<std::string, std::size_t>& counts,
                                                           std::size_t size)
{
    std::map<std::string, std::size_t> alloc;
    std::size_t total = 0;
    for (const auto& [k, c] : counts) {
        total += c;
    }
    if (total == 0) {
        for (const auto& [k, c] : counts) {
            alloc[k] = 0;
        }
        return alloc;
    }
    struct Rem {
        unsigned __int128 remainder;
        std::string key;
    };
    std::vector<Rem> rems;
    std::size_t assigned = 0;
    for (const auto& [k, c] : counts) {
        const auto num = static_cast<unsigned __int128>(size) * c;
        const auto base = static_cast<std::size_t>(num / total);
        alloc[k] = base;
        assigned += base;
        rems.push_back({num % total, k});
    }
    std::stable_sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) { return a.remainder > b.remainder; });
    for (std::size_t i = 0; assigned < size && i < rems.size(); ++i, ++assigned) {
        ++alloc[rems[i].key];
    }
    return alloc;
}

SplitPlanner::SplitPlanner(SplitSpec spec) : spec_(std::move(spec))
{
    if (spec_.stratify_by != "lang" && spec_.stratify_by != "subset") {
        throw ConfigError("stratify_by must be 'lang' or 'subset'");
    }
}

const std::string& SplitPlanner::key(const DocumentRecord& doc) const
{
    return spec_.stratify_by == "subset" ? doc.subset : doc.lang;
}

void SplitPlanner::observe(const DocumentRecord& doc)
{
    const auto& k = key(doc);
    ++counts_[k];
    const std::size_t cap = spec_.valid_size + spec_.test_size;
    if (cap == 0) {
        return;
    }
    auto& heap = best_[k];
    Ranked r{seeded_hash(spec_.seed, doc.id), doc.id};
    if (heap.size() < cap) {
        heap.push_back(std::move(r));
        std::push_heap(heap.begin(), heap.end());
    } else if (r < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = std::move(r);
        std::push_heap(heap.begin(), heap.end());
    }
}

void SplitPlanner::finalize()
{
    std::size_t total = 0;
    for (const auto& [k, c] : counts_) {
        total += c;
    }
    if (spec_.valid_size + spec_.test_size > total) {
        throw DataError("split needs " + std::to_string(spec_.valid_size + spec_.test_size) +
                        " held-out documents but the input has " + std::to_string(total));
    }
    valid_alloc_ = proportional_allocation(counts_, spec_.valid_size);
    test_alloc_ = proportional_allocation(counts_, spec_.test_size);
    for (const auto& [k, c] : counts_) {
        const std::size_t need = valid_alloc_[k] + test_alloc_[k];
        if (need > c) {
            throw DataError("stratum '" + k + "' has " + std::to_string(c) + " documents but its held-out share is " +
                            std::to_string(need));
        }
        auto ranked = best_[k];
        std::sort(ranked.begin(), ranked.end());
        for (std::size_t i = 0; i < need; ++i) {
            (i < valid_alloc_[k] ? valid_ids_ : test_ids_).insert(ranked[i].id);
        }
    }
    best_.clear();
    finalized_ = true;
}

SplitPart SplitPlanner::route(const DocumentRecord& doc) const
{
    if (!finalized_) {
        throw ConfigError("SplitPlanner::route called before finalize");
    }
    if (valid_ids_.contains(doc.id)) {
        return SplitPart::valid;
    }
    if (test_ids_.contains(doc.id)) {
        return SplitPart::test;
    }
    return SplitPart::train;
}

SplitResult split(const std::vector<DocumentRecord>& docs, const SplitSpec& spec)
{
    SplitPlanner planner(spec);
    for (const auto& d : docs) {
        planner.observe(d);
    }
    planner.finalize();
    SplitResult out;
    for (const auto& d : docs) {
        switch (planner.route(d)) {
        case SplitPart::train:
            out.train.push_back(d);
            break;
        case SplitPart::valid:
            out.valid.push_back(d);
            break;
        case SplitPart::test:
            out.test.push_back(d);
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Composition report

namespace {

std::string dataset_of(const std::string& subset)
{
    const auto slash = subset.find('/');
    return slash == std::string::npos ? subset : subset.substr(0, slash);
}

} // namespace

void CompositionReport::add(const std::string& lang, const std::string& subset, std::uint64_t documents,
                            std::uint64_t tokens)
{
    add_scaled(lang, subset, documents, static_cast<double>(tokens));
}

void CompositionReport::add_scaled(const std::string& lang, const std::string& subset, std::uint64_t documents,
                                   double tokens)
{
    auto& acc = cells_[{lang, subset}];
    acc.documents += documents;
    acc.tokens += tokens;
}

double CompositionReport::total_tokens() const
{
    double total = 0.0;
    for (const auto& [k, a] : cells_) {
        total += a.tokens;
    }
    return total;
}

std::uint64_t CompositionReport::total_documents() const
{
    std::uint64_t total = 0;
    for (const auto& [k, a] : cells_) {
        total += a.documents;
    }
    return total;
}

std::vector<CompositionCell> CompositionReport::cells() const
{
    const double total = total_tokens();
    std::vector<CompositionCell> out;
    for (const auto& [k, a] : cells_) {
        out.push_back({k.first, k.second, a.documents, static_cast<std::uint64_t>(std::llround(a.tokens)),
                       total > 0 ? 100.0 * a.tokens / total : 0.0});
    }
    return out;
}

std::map<std::string, double> CompositionReport::language_percent() const
{
    const double total = total_tokens();
    std::map<std::string, double> tokens;
    for (const auto& [k, a] : cells_) {
        tokens[k.first] += a.tokens;
    }
    for (auto& [lang, t] : tokens) {
        t = total > 0 ? 100.0 * t / total : 0.0;
    }
    return tokens;
}

std::map<std::string, double> CompositionReport::dataset_percent() const
{
    const double total = total_tokens();
    std::map<std::string, double> tokens;
    for (const auto& [k, a] : cells_) {
        tokens[dataset_of(k.second)] += a.tokens;
    }
    for (auto& [name, t] : tokens) {
        t = total > 0 ? 100.0 * t / total : 0.0;
    }
    return tokens;
}

nlohmann::ordered_json CompositionReport::to_json() const
{
    const double total = total_tokens();
    nlohmann::ordered_json j;
    j["label"] = label;
    j["total_documents"] = total_documents();
    j["total_tokens"] = total;
    auto cells_json = nlohmann::ordered_json::array();
    for (const auto& [k, a] : cells_) {
        nlohmann::ordered_json c;
        c["lang"] = k.first;
        c["subset"] = k.second;
        c["documents"] = a.documents;
        c["tokens"] = a.tokens;
        c["percent"] = total > 0 ? 100.0 * a.tokens / total : 0.0;
        cells_json.push_back(std::move(c));
    }
    j["cells"] = std::move(cells_json);
    j["languages"] = language_percent();
    j["datasets"] = dataset_percent();
    return j;
}

std::string CompositionReport::to_table() const
{
    const double total = total_tokens();
    std::map<std::string, Acc> by_lang;
    for (const auto& [k, a] : cells_) {
        by_lang[k.first].documents += a.documents;
        by_lang[k.first].tokens += a.tokens;
    }
    std::ostringstream ss;
    ss << "Composition (" << label << ")\n";
    ss << std::left << std::setw(12) << "Language" << std::setw(24) << "Subset" << std::right << std::setw(14)
       << "Documents" << std::setw(18) << "BPE Tokens" << std::setw(10) << "Ratio" << "\n";
    for (const auto& [k, a] : cells_) {
        ss << std::left << std::setw(12) << k.first << std::setw(24) << k.second << std::right << std::setw(14)
           << a.documents << std::setw(18) << fixed(a.tokens, 0) << std::setw(9)
           << fixed(total > 0 ? 100.0 * a.tokens / total : 0.0, 3) << "%\n";
    }
    ss << std::string(78, '-') << "\n";
    for (const auto& [lang, a] : by_lang) {
        ss << std::left << std::setw(12) << lang << std::setw(24) << "(all)" << std::right << std::setw(14)
           << a.documents << std::setw(18) << fixed(a.tokens, 0) << std::setw(9)
           << fixed(total > 0 ? 100.0 * a.tokens / total : 0.0, 3) << "%\n";
    }
    ss << std::left << std::setw(36) << "Total" << std::right << std::setw(14) << total_documents() << std::setw(18)
       << fixed(total, 0) << std::setw(9) << "100.000" << "%\n";
    return ss.str();
}

CompositionReport compose_report(const std::vector<DocumentRecord>& docs, const Vocabulary& vocab,
                                 std::size_t threads)
{
    threads = std::max<std::size_t>(1, std::min(threads, docs.size()));
    std::vector<std::uint64_t> lengths(docs.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        CachingEncoder enc(vocab);
        for (std::size_t i = begin; i < end; ++i) {
            lengths[i] = enc.count(docs[i].text);
        }
    };
    if (threads == 1) {
        work(0, docs.size());
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (docs.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(docs.size(), t * chunk);
            workers.emplace_back(work, begin, std::min(docs.size(), begin + chunk));
        }
        for (auto& w : workers) {
            w.join();
        }
    }
    CompositionReport report;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        report.add(docs[i].lang, docs[i].subset, 1, lengths[i]);
    }
    return report;
}

} // namespace tkmx
