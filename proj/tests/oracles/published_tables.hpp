#pragma once

// Published reference numbers, transcribed by hand. Shared by the unit tests
// and the acceptance runner.

#include <string>
#include <vector>

namespace published {

struct CorpusRow {
    std::string dataset;
    std::string subset;
    double documents_thousands;
    double tokens_millions;
};

// Hungarian corpus after filtering, per subset.
inline const std::vector<CorpusRow>& hungarian_corpus()
{
    static const std::vector<CorpusRow> rows = {
        {"Common Crawl", ".hu", 52775.312, 40621.051623},  {"Common Crawl", ".ro", 552.187, 397.695476057},
        {"Common Crawl", ".sk", 446.774, 224.604267996},    {"Common Crawl", ".com", 2984.912, 2641.12613456},
        {"Repo", "EPA", 300.790, 2672.37998772},             {"Repo", "Books", 32.830, 1338.89434093},
        {"Repo", "OJS", 27.702, 96.3628461192},              {"Repo", "OAI", 349.398, 7649.32137074},
        {"News", "News", 5938.789, 2723.86983503},           {"Other", "Court", 198.296, 1110.3043573},
        {"Other", "HuParl", 1.707, 140.560154724},           {"Other", "OpenSubtitles", 88.519, 508.851908561},
        {"Other", "Wikipedia", 158.457, 232.159235234},
    };
    return rows;
}

struct PrintedPercent {
    std::string dataset;
    double percent;
    int decimals; // digits after the point as printed
};

inline const std::vector<PrintedPercent>& hungarian_corpus_percentages()
{
    static const std::vector<PrintedPercent> p = {
        {"Common Crawl", 72.708, 3}, {"Repo", 19.478972, 6}, {"News", 4.5, 1}, {"Other", 3.3, 1}};
    return p;
}

constexpr double hungarian_corpus_total_tokens_millions = 60357.1815379;

// Pretraining mixture by language, billions of tokens, and printed percents.
struct LanguageShare {
    std::string lang;
    double tokens_billions;
    int printed_percent;
};

inline const std::vector<LanguageShare>& mixture_languages()
{
    static const std::vector<LanguageShare> v = {{"hu", 70, 44}, {"en", 38, 24}, {"de", 34, 21}, {"code", 18, 11}};
    return v;
}

struct FertilityRow {
    std::string lang;
    double base;
    double adapted;
    double printed_change;
};

inline const std::vector<FertilityRow>& fertility_table()
{
    static const std::vector<FertilityRow> v = {
        {"hu", 3.1269, 1.6584, -46.96}, {"en", 1.5705, 1.9387, 23.44}, {"de", 2.0502, 2.3090, 12.62}};
    return v;
}

} // namespace published
