#include "tkmx/vocab_io.hpp"

#include "tkmx/error.hpp"
#include "tkmx/io.hpp"
#include "tkmx/unicode.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace tkmx {

using ordered_json = nlohmann::ordered_json;

std::string serialize_vocab(const Vocabulary& vocab)
{
    ordered_json j;
    j["version"] = 1;
    j["pretokenizer"] = std::string(to_string(vocab.pretokenizer()));
    j["specials"] = vocab.specials();
    auto tokens = ordered_json::array();
    for (const auto& t : vocab.tokens()) {
        tokens.push_back(base64_encode(t));
    }
    j["tokens"] = std::move(tokens);
    auto merges = ordered_json::array();
    for (const auto& m : vocab.merges()) {
        merges.push_back({m.left, m.right});
    }
    j["merges"] = std::move(merges);
    return j.dump() + "\n";
}

Vocabulary parse_vocab(std::string_view text)
{
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("vocab file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object()) {
            throw ParseError("vocab file must be a JSON object");
        }
        if (j.at("version").get<int>() != 1) {
            throw ParseError("unsupported vocab version " + j.at("version").dump());
        }
        const auto pretok = pretokenizer_from_string(j.at("pretokenizer").get<std::string>());
        const auto specials = j.at("specials").get<std::vector<std::string>>();
        const auto& tokens_json = j.at("tokens");
        const auto& merges_json = j.at("merges");

        std::vector<MergeRule> merges;
        merges.reserve(merges_json.size());
        for (std::size_t i = 0; i < merges_json.size(); ++i) {
            const auto& m = merges_json[i];
            if (!m.is_array() || m.size() != 2 || !m[0].is_number_unsigned() || !m[1].is_number_unsigned()) {
                throw ParseError("merge " + std::to_string(i) + " is not a [left, right] pair of ids");
            }
            merges.push_back({m[0].get<TokenId>(), m[1].get<TokenId>()});
        }
        const std::size_t expected = kNumBaseTokens + merges.size() + specials.size();
        if (tokens_json.size() != expected) {
            throw ParseError("token count " + std::to_string(tokens_json.size()) + " != 256 + merges + specials = " +
                             std::to_string(expected));
        }
        std::vector<std::string> tokens;
        tokens.reserve(tokens_json.size());
        for (std::size_t i = 0; i < tokens_json.size(); ++i) {
            try {
                tokens.push_back(base64_decode(tokens_json[i].get<std::string>()));
            } catch (const Error& e) {
                throw ParseError("token " + std::to_string(i) + ": " + e.what());
            }
        }
        ByteOrder order{};
        for (std::size_t i = 0; i < kNumBaseTokens; ++i) {
            if (tokens[i].size() != 1) {
                throw ParseError("token " + std::to_string(i) + " must be a single byte");
            }
            order[i] = static_cast<std::uint8_t>(tokens[i][0]);
        }
        Vocabulary vocab(order, std::move(merges), specials, pretok);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] != vocab.tokens()[i]) {
                throw ParseError("token " + std::to_string(i) + " bytes do not match its merge rule or special");
            }
        }
        return vocab;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed vocab file: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
}

Vocabulary load_vocab(const std::filesystem::path& path)
{
    try {
        return parse_vocab(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path)
{
    write_file(path, serialize_vocab(vocab));
}

Digest vocab_hash(const Vocabulary& vocab)
{
    return sha256(serialize_vocab(vocab));
}

// ---------------------------------------------------------------------------
// Importers

namespace {

// Rank-ordered byte pair merging restricted to ranks below `limit`, as
// tiktoken applies it. Returns the final parts.
std::vector<std::string> replay_ranks(const std::string& bytes,
                                      const std::unordered_map<std::string, std::size_t>& ranks,
                                      std::size_t limit)
{
    std::vector<std::string> parts;
    for (char c : bytes) {
        parts.emplace_back(1, c);
    }
    while (parts.size() > 1) {
        std::size_t best = limit;
        std::size_t at = parts.size();
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            const auto it = ranks.find(parts[i] + parts[i + 1]);
            if (it != ranks.end() && it->second < best) {
                best = it->second;
                at = i;
            }
        }
        if (at == parts.size()) {
            break;
        }
        parts[at] += parts[at + 1];
        parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    }
    return parts;
}

// Builds a Vocabulary from tokens listed in rank order (single bytes first),
// recovering one merge per composite token.
ImportResult build_from_ranked(const std::vector<std::string>& ranked, std::vector<std::string> specials,
                               Pretokenizer pretokenizer)
{
    if (ranked.size() < kNumBaseTokens) {
        throw ParseError("fewer than 256 ranked tokens");
    }
    std::unordered_map<std::string, std::size_t> ranks;
    ranks.reserve(ranked.size());
    ByteOrder order{};
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (!ranks.emplace(ranked[r], r).second) {
            throw ParseError("token at rank " + std::to_string(r) + " is a duplicate");
        }
        if (r < kNumBaseTokens) {
            if (ranked[r].size() != 1) {
                throw ParseError("rank " + std::to_string(r) + " must be a single byte");
            }
            order[r] = static_cast<std::uint8_t>(ranked[r][0]);
        } else if (ranked[r].size() < 2) {
            throw ParseError("rank " + std::to_string(r) + " is a single byte after the base alphabet");
        }
    }
    ImportResult result;
    std::vector<MergeRule> merges;
    merges.reserve(ranked.size() - kNumBaseTokens);
    for (std::size_t r = kNumBaseTokens; r < ranked.size(); ++r) {
        auto parts = replay_ranks(ranked[r], ranks, r);
        if (parts.size() != 2) {
            // Fall back to the two-way split whose larger part rank is lowest.
            std::size_t best_max = r;
            std::size_t best_left = r;
            parts.clear();
            for (std::size_t cut = 1; cut < ranked[r].size(); ++cut) {
                const auto l = ranks.find(ranked[r].substr(0, cut));
                const auto rt = ranks.find(ranked[r].substr(cut));
                if (l == ranks.end() || rt == ranks.end() || l->second >= r || rt->second >= r) {
                    continue;
                }
                const auto mx = std::max(l->second, rt->second);
                if (mx < best_max || (mx == best_max && l->second < best_left)) {
                    best_max = mx;
                    best_left = l->second;
                    parts = {l->first, rt->first};
                }
            }
            if (parts.size() != 2) {
                throw ParseError("token at rank " + std::to_string(r) + " has no derivation from lower ranks");
            }
            ++result.split_fallbacks;
        }
        merges.push_back({static_cast<TokenId>(ranks.at(parts[0])), static_cast<TokenId>(ranks.at(parts[1]))});
    }
    result.vocab = Vocabulary(order, std::move(merges), std::move(specials), pretokenizer);
    return result;
}

std::vector<std::string> byte_to_unicode_table()
{
    std::vector<int> bs;
    for (int b = '!'; b <= '~'; ++b) {
        bs.push_back(b);
    }
    for (int b = 0xA1; b <= 0xAC; ++b) {
        bs.push_back(b);
    }
    for (int b = 0xAE; b <= 0xFF; ++b) {
        bs.push_back(b);
    }
    std::vector<int> cs = bs;
    int n = 0;
    for (int b = 0; b < 256; ++b) {
        if (std::find(bs.begin(), bs.end(), b) == bs.end()) {
            bs.push_back(b);
            cs.push_back(256 + n);
            ++n;
        }
    }
    std::vector<std::string> table(256);
    for (std::size_t i = 0; i < bs.size(); ++i) {
        unicode::append_utf8(table[static_cast<std::size_t>(bs[i])], cs[i]);
    }
    return table;
}

std::string decode_byte_level(std::string_view s, const std::unordered_map<std::int32_t, std::uint8_t>& reverse,
                              bool& ok)
{
    std::string out;
    std::size_t pos = 0;
    ok = true;
    while (pos < s.size()) {
        const auto cp = unicode::next_code_point(s, pos);
        const auto it = reverse.find(cp);
        if (it == reverse.end()) {
            ok = false;
            return {};
        }
        out.push_back(static_cast<char>(it->second));
    }
    return out;
}

} // namespace

ImportResult import_tiktoken(const std::filesystem::path& path, std::vector<std::string> specials,
                             Pretokenizer pretokenizer)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::map<std::size_t, std::string> by_rank;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto sp = line.find(' ');
        if (sp == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected '<base64> <rank>'");
        }
        std::size_t rank = 0;
        try {
            rank = std::stoull(line.substr(sp + 1));
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad rank");
        }
        std::string bytes;
        try {
            bytes = base64_decode(std::string_view(line).substr(0, sp));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!by_rank.emplace(rank, std::move(bytes)).second) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate rank");
        }
    }
    std::vector<std::string> ranked;
    ranked.reserve(by_rank.size());
    for (auto& [rank, bytes] : by_rank) {
        if (rank != ranked.size()) {
            throw ParseError(path.string() + ": ranks are not contiguous at " + std::to_string(ranked.size()));
        }
        ranked.push_back(std::move(bytes));
    }
    auto result = build_from_ranked(ranked, std::move(specials), pretokenizer);
    result.declared = ranked.size();
    return result;
}

ImportResult import_hf(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt,
                       std::vector<std::string> extra_specials, Pretokenizer pretokenizer)
{
    nlohmann::json vj;
    try {
        vj = nlohmann::json::parse(read_file(vocab_json));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(vocab_json.string() + ": " + e.what());
    }
    const auto table = byte_to_unicode_table();
    std::unordered_map<std::int32_t, std::uint8_t> reverse;
    for (std::size_t b = 0; b < 256; ++b) {
        std::size_t pos = 0;
        reverse.emplace(unicode::next_code_point(table[b], pos), static_cast<std::uint8_t>(b));
    }

    // id -> (bytes, is byte-level decodable)
    std::map<std::size_t, std::string> raw_by_id;
    for (const auto& [text, id] : vj.items()) {
        if (!id.is_number_unsigned()) {
            throw ParseError(vocab_json.string() + ": id of '" + text + "' is not a non-negative integer");
        }
        if (!raw_by_id.emplace(id.get<std::size_t>(), text).second) {
            throw ParseError(vocab_json.string() + ": duplicate id " + id.dump());
        }
    }

    std::ifstream in(merges_txt);
    if (!in) {
        throw DataError("cannot open " + merges_txt.string());
    }
    std::vector<std::pair<std::string, std::string>> merge_lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || (lineno == 1 && line.rfind("#version", 0) == 0)) {
            continue;
        }
        const auto sp = line.find(' ');
        if (sp == std::string::npos || line.find(' ', sp + 1) != std::string::npos) {
            throw ParseError(merges_txt.string() + ":" + std::to_string(lineno) + ": expected two symbols");
        }
        merge_lines.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }

    // Ranked token list: base bytes ordered by their vocab.json id, then
    // merge products in merges.txt order.
    std::map<std::size_t, std::uint8_t> base_by_id;
    std::unordered_map<std::string, std::size_t> id_of_text;
    for (const auto& [id, text] : raw_by_id) {
        id_of_text.emplace(text, id);
        bool ok = false;
        const auto bytes = decode_byte_level(text, reverse, ok);
        if (ok && bytes.size() == 1) {
            base_by_id.emplace(id, static_cast<std::uint8_t>(bytes[0]));
        }
    }
    if (base_by_id.size() != kNumBaseTokens) {
        throw ParseError(vocab_json.string() + ": expected 256 byte tokens, found " +
                         std::to_string(base_by_id.size()));
    }
    ImportResult result;
    std::vector<std::string> ranked;
    std::unordered_map<std::size_t, bool> covered;
    for (const auto& [id, b] : base_by_id) {
        if (ranked.size() != id) {
            ++result.renumbered;
        }
        ranked.emplace_back(1, static_cast<char>(b));
        covered[id] = true;
    }
    std::vector<std::pair<std::size_t, std::size_t>> operand_ids;
    for (std::size_t i = 0; i < merge_lines.size(); ++i) {
        const auto& [a, b] = merge_lines[i];
        const auto merged = id_of_text.find(a + b);
        if (merged == id_of_text.end()) {
            throw ParseError(merges_txt.string() + ": merge " + std::to_string(i) + " produces a token missing from " +
                             vocab_json.filename().string());
        }
        bool ok = false;
        const auto bytes = decode_byte_level(a + b, reverse, ok);
        if (!ok) {
            throw ParseError(merges_txt.string() + ": merge " + std::to_string(i) + " is not byte-level text");
        }
        if (merged->second != ranked.size()) {
            ++result.renumbered;
        }
        covered[merged->second] = true;
        ranked.push_back(bytes);
    }

    std::vector<std::string> specials;
    for (const auto& [id, text] : raw_by_id) {
        if (!covered.contains(id)) {
            if (id != ranked.size() + specials.size()) {
                ++result.renumbered;
            }
            specials.push_back(text);
        }
    }
    std::size_t extra_added = 0;
    for (auto& s : extra_specials) {
        if (std::find(specials.begin(), specials.end(), s) == specials.end()) {
            specials.push_back(std::move(s));
            ++extra_added;
        }
    }

    // Merges must follow the listed pairs, not a replay: rebuild them directly.
    std::unordered_map<std::string, std::size_t> rank_of;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (!rank_of.emplace(ranked[r], r).second) {
            throw ParseError(merges_txt.string() + ": token at rank " + std::to_string(r) + " is produced twice");
        }
    }
    ByteOrder order{};
    for (std::size_t r = 0; r < kNumBaseTokens; ++r) {
        order[r] = static_cast<std::uint8_t>(ranked[r][0]);
    }
    std::vector<MergeRule> merges;
    merges.reserve(merge_lines.size());
    for (std::size_t i = 0; i < merge_lines.size(); ++i) {
        bool ok_a = false;
        bool ok_b = false;
        const auto a = decode_byte_level(merge_lines[i].first, reverse, ok_a);
        const auto b = decode_byte_level(merge_lines[i].second, reverse, ok_b);
        const auto la = rank_of.find(a);
        const auto lb = rank_of.find(b);
        if (!ok_a || !ok_b || la == rank_of.end() || lb == rank_of.end()) {
            throw ParseError(merges_txt.string() + ": merge " + std::to_string(i) + " references an undefined token");
        }
        merges.push_back({static_cast<TokenId>(la->second), static_cast<TokenId>(lb->second)});
    }
    const std::size_t declared = raw_by_id.size() + extra_added;
    result.vocab = Vocabulary(order, std::move(merges), std::move(specials), pretokenizer);
    result.declared = declared;
    return result;
}

} // namespace tkmx
