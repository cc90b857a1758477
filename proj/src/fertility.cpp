#include "tkmx/fertility.hpp"

#include "tkmx/bpe.hpp"
#include "tkmx/error.hpp"
#include "tkmx/format.hpp"
#include "tkmx/unicode.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <thread>

namespace tkmx {

double FertilityCounts::value(FertilityMode mode) const
{
    if (words == 0) {
        throw DataError("fertility is undefined: the documents contain no whitespace-delimited words");
    }
    if (mode == FertilityMode::document) {
        return ratio_sum / static_cast<double>(ratio_documents);
    }
    return static_cast<double>(tokens) / static_cast<double>(words);
}

FertilityCounts count_fertility(const Vocabulary& vocab, std::span<const std::string> docs, std::size_t threads)
{
    std::vector<std::uint64_t> tokens(docs.size());
    std::vector<std::uint64_t> words(docs.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        CachingEncoder enc(vocab);
        for (std::size_t i = begin; i < end; ++i) {
            tokens[i] = enc.count(docs[i]);
            words[i] = unicode::count_words(docs[i]);
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, docs.size()));
    if (threads == 1) {
        work(0, docs.size());
    } else {
        const std::size_t chunk = (docs.size() + threads - 1) / threads;
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(docs.size(), t * chunk);
            pool.emplace_back(work, begin, std::min(docs.size(), begin + chunk));
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    // Sequential reduction keeps the floating-point sum independent of threads.
    FertilityCounts c;
    c.documents = docs.size();
    for (std::size_t i = 0; i < docs.size(); ++i) {
        c.tokens += tokens[i];
        c.words += words[i];
        if (words[i] > 0) {
            c.ratio_sum += static_cast<double>(tokens[i]) / static_cast<double>(words[i]);
            ++c.ratio_documents;
        }
    }
    return c;
}

double fertility(const Vocabulary& vocab, std::span<const std::string> docs, FertilityMode mode, std::size_t threads)
{
    return count_fertility(vocab, docs, threads).value(mode);
}

double relative_change(double base, double adapted)
{
    if (base == 0.0) {
        throw DataError("relative change from a zero base fertility is undefined");
    }
    return (adapted - base) / base * 100.0;
}

std::string language_name(const std::string& code)
{
    static const std::map<std::string, std::string> names = {
        {"hu", "Hungarian"}, {"en", "English"}, {"de", "German"}, {"fr", "French"},
        {"es", "Spanish"},   {"it", "Italian"}, {"pl", "Polish"}, {"ro", "Romanian"},
    };
    const auto it = names.find(code);
    return it == names.end() ? code : it->second;
}

nlohmann::ordered_json FertilityReport::to_json() const
{
    nlohmann::ordered_json j;
    j["base"] = base_name;
    j["adapted"] = adapted_name;
    j["mode"] = mode == FertilityMode::corpus ? "corpus" : "document";
    auto rows_json = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["lang"] = r.lang;
        row["language"] = language_name(r.lang);
        row["base"] = r.base;
        row["adapted"] = r.adapted;
        row["change_percent"] = r.change();
        row["change_percent_rounded"] = round_half_up(r.change(), 2);
        rows_json.push_back(std::move(row));
    }
    j["rows"] = std::move(rows_json);
    return j;
}

std::string FertilityReport::to_table() const
{
    std::size_t lang_w = std::string("Language").size();
    for (const auto& r : rows) {
        lang_w = std::max(lang_w, language_name(r.lang).size());
    }
    const std::size_t base_w = std::max<std::size_t>(10, base_name.size());
    const std::size_t adapted_w = std::max<std::size_t>(10, adapted_name.size());
    std::ostringstream ss;
    ss << std::left << std::setw(static_cast<int>(lang_w)) << "Language" << "  " << std::right
       << std::setw(static_cast<int>(base_w)) << base_name << "  " << std::setw(static_cast<int>(adapted_w))
       << adapted_name << "  " << std::setw(10) << "Change (%)" << "\n";
    for (const auto& r : rows) {
        ss << std::left << std::setw(static_cast<int>(lang_w)) << language_name(r.lang) << "  " << std::right
           << std::setw(static_cast<int>(base_w)) << fixed(r.base, 4) << "  " << std::setw(static_cast<int>(adapted_w))
           << fixed(r.adapted, 4) << "  " << std::setw(10) << fixed(r.change(), 2) << "\n";
    }
    return ss.str();
}

FertilityReport compare(const Vocabulary& base, const Vocabulary& adapted,
                        const std::map<std::string, std::vector<std::string>>& docs_by_lang, FertilityMode mode,
                        std::size_t threads)
{
    FertilityReport report;
    report.mode = mode;
    for (const auto& [lang, docs] : docs_by_lang) {
        FertilityRow row;
        row.lang = lang;
        try {
            row.base = fertility(base, docs, mode, threads);
            row.adapted = fertility(adapted, docs, mode, threads);
        } catch (const DataError& e) {
            throw DataError(language_name(lang) + " ('" + lang + "'): " + e.what());
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace tkmx
