#include "tkmx/pretokenizer.hpp"

#include "tkmx/error.hpp"
#include "tkmx/unicode.hpp"

#include <cstdint>

namespace tkmx {

std::string_view to_string(Pretokenizer p)
{
    switch (p) {
    case Pretokenizer::gpt2:
        return "gpt2";
    case Pretokenizer::qwen2:
        return "qwen2";
    }
    return "gpt2";
}

Pretokenizer pretokenizer_from_string(std::string_view name)
{
    if (name == "gpt2") {
        return Pretokenizer::gpt2;
    }
    if (name == "qwen2") {
        return Pretokenizer::qwen2;
    }
    throw ConfigError("unknown pretokenizer '" + std::string(name) + "'");
}

namespace {

enum class Cls : std::uint8_t { letter, number, space, other };

struct Cp {
    std::int32_t value;
    std::uint32_t offset;
    Cls cls;
};

Cls classify(std::int32_t cp)
{
    if (cp < 0) {
        return Cls::other;
    }
    if (cp < 0x80) {
        if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) {
            return Cls::letter;
        }
        if (cp >= '0' && cp <= '9') {
            return Cls::number;
        }
        if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D)) {
            return Cls::space;
        }
        // U+001C..U+001F are White_Space=no; U+0085 handled below.
        return Cls::other;
    }
    if (unicode::is_letter(cp)) {
        return Cls::letter;
    }
    if (unicode::is_number(cp)) {
        return Cls::number;
    }
    if (unicode::is_whitespace(cp)) {
        return Cls::space;
    }
    return Cls::other;
}

class Scanner {
public:
    explicit Scanner(std::string_view text) : text_(text)
    {
        cps_.reserve(text.size());
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto start = static_cast<std::uint32_t>(pos);
            const auto cp = unicode::next_code_point(text, pos);
            cps_.push_back({cp, start, classify(cp)});
        }
    }

    std::size_t size() const { return cps_.size(); }
    std::int32_t cp(std::size_t i) const { return i < cps_.size() ? cps_[i].value : -2; }
    bool is(std::size_t i, Cls c) const { return i < cps_.size() && cps_[i].cls == c; }
    std::size_t offset(std::size_t i) const { return i < cps_.size() ? cps_[i].offset : text_.size(); }

    std::size_t run(std::size_t i, Cls c) const
    {
        while (is(i, c)) {
            ++i;
        }
        return i;
    }

    std::size_t contraction(std::size_t i, bool ignore_case) const
    {
        if (cp(i) != '\'') {
            return 0;
        }
        auto lower = [&](std::size_t j) {
            const auto c = cp(j);
            if (ignore_case && c >= 'A' && c <= 'Z') {
                return c + ('a' - 'A');
            }
            return c;
        };
        const auto a = lower(i + 1);
        const auto b = lower(i + 2);
        if (a == 's' || a == 't' || a == 'm' || a == 'd') {
            return 2;
        }
        if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l')) {
            return 3;
        }
        return 0;
    }

    // \s+(?!\S) followed by \s+ as the fallback alternative.
    std::size_t trailing_space(std::size_t i) const
    {
        const std::size_t end = run(i, Cls::space);
        if (end == size() || end - i == 1) {
            return end;
        }
        return end - 1;
    }

private:
    std::string_view text_;
    std::vector<Cp> cps_;
};

bool is_newline(std::int32_t cp)
{
    return cp == '\r' || cp == '\n';
}

std::size_t match_gpt2(const Scanner& s, std::size_t i)
{
    if (auto n = s.contraction(i, false)) {
        return i + n;
    }
    const std::size_t j = s.cp(i) == ' ' ? i + 1 : i;
    if (s.is(j, Cls::letter)) {
        return s.run(j, Cls::letter);
    }
    if (s.is(j, Cls::number)) {
        return s.run(j, Cls::number);
    }
    if (s.is(j, Cls::other)) {
        return s.run(j, Cls::other);
    }
    return s.trailing_space(i);
}

std::size_t match_qwen2(const Scanner& s, std::size_t i)
{
    if (auto n = s.contraction(i, true)) {
        return i + n;
    }
    if (s.is(i, Cls::letter)) {
        return s.run(i, Cls::letter);
    }
    if (!s.is(i, Cls::number) && !is_newline(s.cp(i)) && s.is(i + 1, Cls::letter)) {
        return s.run(i + 1, Cls::letter);
    }
    if (s.is(i, Cls::number)) {
        return i + 1;
    }
    const std::size_t j = s.cp(i) == ' ' ? i + 1 : i;
    if (s.is(j, Cls::other)) {
        std::size_t end = s.run(j, Cls::other);
        while (is_newline(s.cp(end))) {
            ++end;
        }
        return end;
    }
    // \s*[\r\n]+ ends right after the last newline of the whitespace run.
    const std::size_t end = s.run(i, Cls::space);
    for (std::size_t k = end; k > i; --k) {
        if (is_newline(s.cp(k - 1))) {
            return k;
        }
    }
    return s.trailing_space(i);
}

} // namespace

std::vector<std::string_view> pretokenize(Pretokenizer p, std::string_view text)
{
    std::vector<std::string_view> pieces;
    const Scanner scanner(text);
    std::size_t i = 0;
    while (i < scanner.size()) {
        const std::size_t end = p == Pretokenizer::gpt2 ? match_gpt2(scanner, i) : match_qwen2(scanner, i);
        const std::size_t from = scanner.offset(i);
        pieces.push_back(text.substr(from, scanner.offset(end) - from));
        i = end;
    }
    return pieces;
}

} // namespace tkmx
