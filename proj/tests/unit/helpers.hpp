#pragma once

#include "tkmx/bpe.hpp"
#include "tkmx/document.hpp"
#include "tkmx/unicode.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testutil {

inline std::filesystem::path data_dir()
{
    return TKMX_TEST_DATA_DIR;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag = "tkmx")
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Random valid UTF-8 drawn from a mix of scripts, whitespace and symbols.
inline std::string random_utf8(std::mt19937_64& rng, std::size_t max_cps)
{
    static const std::vector<std::pair<std::int32_t, std::int32_t>> ranges = {
        {0x20, 0x7e},       {0x20, 0x7e},     {0x61, 0x7a},     {0x09, 0x0d},   {0xa0, 0xff},
        {0x100, 0x17f},     {0x300, 0x36f},   {0x391, 0x3c9},   {0x410, 0x44f}, {0x5d0, 0x5ea},
        {0x660, 0x669},     {0x2000, 0x206f}, {0x3000, 0x3000}, {0x4e00, 0x4e80}, {0xac00, 0xac40},
        {0x1f600, 0x1f64f}, {0x10000, 0x1007f},
    };
    std::uniform_int_distribution<std::size_t> len_dist(0, max_cps);
    std::uniform_int_distribution<std::size_t> range_dist(0, ranges.size() - 1);
    const std::size_t n = len_dist(rng);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = ranges[range_dist(rng)];
        std::uniform_int_distribution<std::int32_t> cp(lo, hi);
        tkmx::unicode::append_utf8(out, cp(rng));
    }
    return out;
}

// Words built from a fixed syllable inventory, so BPE has structure to find.
struct SyntheticLanguage {
    std::vector<std::string> syllables;
    std::vector<std::string> words;

    static SyntheticLanguage make(std::mt19937_64& rng, const std::vector<std::string>& letters,
                                  std::size_t n_syllables, std::size_t n_words)
    {
        SyntheticLanguage lang;
        std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
        std::uniform_int_distribution<int> syl_len(1, 3);
        for (std::size_t i = 0; i < n_syllables; ++i) {
            std::string s;
            for (int j = syl_len(rng); j > 0; --j) {
                s += letters[pick(rng)];
            }
            lang.syllables.push_back(s);
        }
        std::uniform_int_distribution<std::size_t> pick_syl(0, n_syllables - 1);
        std::uniform_int_distribution<int> word_len(1, 4);
        for (std::size_t i = 0; i < n_words; ++i) {
            std::string w;
            for (int j = word_len(rng); j > 0; --j) {
                w += lang.syllables[pick_syl(rng)];
            }
            lang.words.push_back(w);
        }
        return lang;
    }

    // Zipf-like word choice.
    std::string text(std::mt19937_64& rng, std::size_t n_words) const
    {
        std::vector<double> weights;
        for (std::size_t i = 0; i < words.size(); ++i) {
            weights.push_back(1.0 / static_cast<double>(i + 1));
        }
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        std::uniform_int_distribution<int> punct(0, 9);
        std::string out;
        for (std::size_t i = 0; i < n_words; ++i) {
            if (i > 0) {
                out += ' ';
            }
            out += words[pick(rng)];
            if (punct(rng) == 0) {
                out += ',';
            }
        }
        return out;
    }
};

inline const std::vector<std::string>& latin_letters()
{
    static const std::vector<std::string> v = {"a", "b", "c", "d", "e", "g", "k", "l", "m", "n", "o",
                                               "r", "s", "t", "z", "á", "é", "ő", "ü", "ö", "ű", "í"};
    return v;
}

inline const std::vector<std::string>& cyrillic_letters()
{
    static const std::vector<std::string> v = {"а", "б", "в", "г", "д", "е", "ж", "к", "л", "м", "н", "о", "п"};
    return v;
}

inline tkmx::DocumentRecord doc(std::string id, std::string text, std::string lang = "hu", std::string subset = "web")
{
    return tkmx::DocumentRecord{std::move(id), std::move(text), std::move(lang), std::move(subset), std::nullopt};
}

inline tkmx::Vocabulary train_vocab(const std::vector<std::string>& docs, std::size_t size,
                                    std::vector<std::string> specials = {},
                                    tkmx::Pretokenizer p = tkmx::Pretokenizer::gpt2)
{
    tkmx::TrainOptions opts;
    opts.target_size = size;
    opts.specials = std::move(specials);
    return tkmx::train(docs, opts, p).vocab;
}

inline tkmx::ByteOrder shuffled_order(std::mt19937_64& rng)
{
    tkmx::ByteOrder order = tkmx::identity_byte_order();
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

} // namespace testutil
