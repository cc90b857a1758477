#include "tkmx/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace tkmx::unicode {

std::int32_t next_code_point(std::string_view s, std::size_t& pos)
{
    const auto* data = reinterpret_cast<const std::uint8_t*>(s.data());
    const auto length = static_cast<std::int32_t>(s.size());
    auto i = static_cast<std::int32_t>(pos);
    UChar32 cp = 0;
    U8_NEXT(data, i, length, cp);
    if (cp < 0) {
        pos += 1;
        return -1;
    }
    pos = static_cast<std::size_t>(i);
    return cp;
}

void append_utf8(std::string& out, std::int32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_valid_utf8(std::string_view s)
{
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (next_code_point(s, pos) < 0) {
            return false;
        }
    }
    return true;
}

std::string to_valid_utf8(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto cp = next_code_point(s, pos);
        append_utf8(out, cp < 0 ? 0xFFFD : cp);
    }
    return out;
}

std::size_t code_point_count(std::string_view s)
{
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < s.size()) {
        next_code_point(s, pos);
        ++n;
    }
    return n;
}

bool is_letter(std::int32_t cp)
{
    return cp >= 0 && (U_GET_GC_MASK(cp) & U_GC_L_MASK) != 0;
}

bool is_number(std::int32_t cp)
{
    return cp >= 0 && (U_GET_GC_MASK(cp) & U_GC_N_MASK) != 0;
}

bool is_whitespace(std::int32_t cp)
{
    return cp >= 0 && u_isUWhiteSpace(cp);
}

bool is_non_latin_letter(std::int32_t cp)
{
    if (!is_letter(cp)) {
        return false;
    }
    UErrorCode status = U_ZERO_ERROR;
    const UScriptCode script = uscript_getScript(cp, &status);
    if (U_FAILURE(status)) {
        return false;
    }
    return script != USCRIPT_LATIN && script != USCRIPT_COMMON && script != USCRIPT_INHERITED;
}

namespace {

const icu::Normalizer2& nfc_instance()
{
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || norm == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *norm;
}

} // namespace

std::string nfc(std::string_view s)
{
    const auto& norm = nfc_instance();
    UErrorCode status = U_ZERO_ERROR;
    const auto valid = to_valid_utf8(s);
    if (norm.isNormalizedUTF8(valid, status) && U_SUCCESS(status)) {
        return valid;
    }
    status = U_ZERO_ERROR;
    std::string out;
    icu::StringByteSink<std::string> sink(&out);
    norm.normalizeUTF8(0, valid, sink, nullptr, status);
    if (U_FAILURE(status)) {
        return valid;
    }
    return out;
}

std::string collapse_whitespace(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t start = pos;
        const auto cp = next_code_point(s, pos);
        if (is_whitespace(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.append(s.substr(start, pos - start));
    }
    return out;
}

std::string normalize_for_dedup(std::string_view s)
{
    return collapse_whitespace(nfc(s));
}

std::vector<std::string_view> split_whitespace(std::string_view s)
{
    std::vector<std::string_view> words;
    std::size_t pos = 0;
    std::size_t word_start = std::string_view::npos;
    while (pos < s.size()) {
        const std::size_t start = pos;
        const auto cp = next_code_point(s, pos);
        if (is_whitespace(cp)) {
            if (word_start != std::string_view::npos) {
                words.push_back(s.substr(word_start, start - word_start));
                word_start = std::string_view::npos;
            }
        } else if (word_start == std::string_view::npos) {
            word_start = start;
        }
    }
    if (word_start != std::string_view::npos) {
        words.push_back(s.substr(word_start));
    }
    return words;
}

std::size_t count_words(std::string_view s)
{
    std::size_t n = 0;
    bool in_word = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto cp = next_code_point(s, pos);
        if (is_whitespace(cp)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

} // namespace tkmx::unicode
