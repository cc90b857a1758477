#include "tkmx/packer.hpp"

#include "tkmx/error.hpp"

#include <bit>
#include <cstring>

namespace tkmx {

static_assert(std::endian::native == std::endian::little, "shard IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'K', 'P', 'K'};
constexpr std::uint32_t kVersion = 1;

} // namespace

std::string to_string(LongDocPolicy p)
{
    return p == LongDocPolicy::split ? "split" : "drop";
}

LongDocPolicy long_doc_policy_from_string(std::string_view s)
{
    if (s == "split") {
        return LongDocPolicy::split;
    }
    if (s == "drop") {
        return LongDocPolicy::drop;
    }
    throw ConfigError("unknown long-doc policy '" + std::string(s) + "' (expected split or drop)");
}

void PackerConfig::validate() const
{
    if (window < 2) {
        throw ConfigError("window must be at least 2 to hold the delimiter framing, got " + std::to_string(window));
    }
    if (window > 0xffffffffULL) {
        throw ConfigError("window does not fit in 32 bits");
    }
}

void PackerConfig::validate(const Vocabulary& vocab) const
{
    validate();
    if (!vocab.is_special(delimiter)) {
        throw ConfigError("delimiter id " + std::to_string(delimiter) + " is not a special token of the vocabulary");
    }
}

nlohmann::ordered_json to_json(const PackStats& stats)
{
    nlohmann::ordered_json j;
    j["docs_in"] = stats.docs_in;
    j["docs_packed"] = stats.docs_packed;
    j["docs_split"] = stats.docs_split;
    j["docs_dropped"] = stats.docs_dropped;
    j["windows"] = stats.windows;
    j["tokens"] = stats.tokens;
    j["window_tokens"] = stats.window_tokens;
    return j;
}

Packer::Packer(PackerConfig config, std::size_t vocab_size, Sink sink)
    : config_(config), vocab_size_(vocab_size), sink_(std::move(sink))
{
    config_.validate();
    if (config_.delimiter >= vocab_size_) {
        throw ConfigError("delimiter id " + std::to_string(config_.delimiter) + " is outside the vocabulary");
    }
    reset_open();
}

void Packer::reset_open()
{
    open_.ids.clear();
    open_.spans.clear();
    open_.ids.push_back(config_.delimiter);
}

void Packer::emit()
{
    if (open_.spans.empty()) {
        return;
    }
    ++stats_.windows;
    stats_.window_tokens += open_.ids.size();
    PackedWindow out;
    std::swap(out, open_);
    sink_(std::move(out));
    reset_open();
}

void Packer::push(const TokenizedDocument& doc)
{
    ++stats_.docs_in;
    for (std::size_t i = 0; i < doc.ids.size(); ++i) {
        const TokenId t = doc.ids[i];
        if (t >= vocab_size_) {
            throw DataError("document '" + doc.id + "' has unknown token id " + std::to_string(t) + " at position " +
                            std::to_string(i));
        }
        if (t == config_.delimiter) {
            throw DataError("document '" + doc.id + "' contains the delimiter token at position " + std::to_string(i));
        }
    }
    const std::size_t cap = config_.window;
    const std::size_t len = doc.ids.size();
    if (len > cap - 2) {
        if (config_.long_doc == LongDocPolicy::drop) {
            ++stats_.docs_dropped;
            return;
        }
        emit();
        ++stats_.docs_split;
        ++stats_.docs_packed;
        stats_.tokens += len;
        std::uint32_t chunk = 0;
        for (std::size_t off = 0; off < len; off += cap - 2, ++chunk) {
            const std::size_t n = std::min(cap - 2, len - off);
            open_.ids.insert(open_.ids.end(), doc.ids.begin() + off, doc.ids.begin() + off + n);
            open_.ids.push_back(config_.delimiter);
            open_.spans.push_back({doc.id, 1, 1 + n, chunk});
            emit();
        }
        return;
    }
    if (open_.ids.size() + len + 1 > cap) {
        emit();
    }
    const std::size_t start = open_.ids.size();
    open_.ids.insert(open_.ids.end(), doc.ids.begin(), doc.ids.end());
    open_.ids.push_back(config_.delimiter);
    open_.spans.push_back({doc.id, start, start + len, 0});
    ++stats_.docs_packed;
    stats_.tokens += len;
}

void Packer::finish()
{
    emit();
}

std::vector<PackedWindow> pack(std::span<const TokenizedDocument> docs, const PackerConfig& config,
                               std::size_t vocab_size, PackStats* stats)
{
    std::vector<PackedWindow> out;
    Packer packer(config, vocab_size, [&](PackedWindow&& w) { out.push_back(std::move(w)); });
    for (const auto& d : docs) {
        packer.push(d);
    }
    packer.finish();
    if (stats != nullptr) {
        *stats = packer.stats();
    }
    return out;
}

void unpack_window(std::span<const TokenId> ids, TokenId delimiter, std::vector<std::vector<TokenId>>& out)
{
    if (ids.empty() || ids.front() != delimiter) {
        throw FormatError("window does not start with the delimiter");
    }
    if (ids.size() < 2 || ids.back() != delimiter) {
        throw FormatError("window does not end with the delimiter");
    }
    std::size_t start = 1;
    for (std::size_t i = 1; i < ids.size(); ++i) {
        if (ids[i] == delimiter) {
            out.emplace_back(ids.begin() + start, ids.begin() + i);
            start = i + 1;
        }
    }
}

std::vector<std::vector<TokenId>> unpack(std::span<const PackedWindow> windows, TokenId delimiter)
{
    std::vector<std::vector<TokenId>> out;
    for (const auto& w : windows) {
        unpack_window(w.ids, delimiter, out);
    }
    return out;
}

ShardWriter::ShardWriter(const std::filesystem::path& path, std::uint32_t window) : window_(window)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) {
        throw DataError("cannot open shard for writing: " + path.string());
    }
    out_.write(kMagic, 4);
    out_.write(reinterpret_cast<const char*>(&kVersion), 4);
    out_.write(reinterpret_cast<const char*>(&window_), 4);
}

void ShardWriter::write(std::span<const TokenId> ids)
{
    if (ids.size() > window_) {
        throw DataError("window of " + std::to_string(ids.size()) + " tokens exceeds the shard cap " +
                        std::to_string(window_));
    }
    const auto n = static_cast<std::uint32_t>(ids.size());
    out_.write(reinterpret_cast<const char*>(&n), 4);
    out_.write(reinterpret_cast<const char*>(ids.data()), static_cast<std::streamsize>(ids.size_bytes()));
    ++windows_;
}

void ShardWriter::close()
{
    out_.close();
    if (!out_) {
        throw DataError("failed to finish writing shard");
    }
}

ShardReader::ShardReader(const std::filesystem::path& path) : in_(path, std::ios::binary)
{
    if (!in_) {
        throw DataError("cannot open shard: " + path.string());
    }
    char magic[4];
    std::uint32_t version = 0;
    in_.read(magic, 4);
    in_.read(reinterpret_cast<char*>(&version), 4);
    in_.read(reinterpret_cast<char*>(&window_), 4);
    if (!in_ || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("not a packed shard (bad magic): " + path.string());
    }
    if (version != kVersion) {
        throw FormatError("unsupported shard version " + std::to_string(version));
    }
}

bool ShardReader::next(std::vector<TokenId>& ids)
{
    std::uint32_t n = 0;
    in_.read(reinterpret_cast<char*>(&n), 4);
    if (in_.gcount() == 0 && in_.eof()) {
        return false;
    }
    if (in_.gcount() != 4) {
        throw FormatError("truncated shard: partial window header");
    }
    if (n > window_) {
        throw FormatError("window length " + std::to_string(n) + " exceeds the shard cap");
    }
    ids.resize(n);
    in_.read(reinterpret_cast<char*>(ids.data()), static_cast<std::streamsize>(n) * 4);
    if (in_.gcount() != static_cast<std::streamsize>(n) * 4) {
        throw FormatError("truncated shard: window body");
    }
    return true;
}

std::vector<std::vector<TokenId>> read_shard(const std::filesystem::path& path, std::uint32_t* window)
{
    ShardReader reader(path);
    if (window != nullptr) {
        *window = reader.window();
    }
    std::vector<std::vector<TokenId>> out;
    std::vector<TokenId> ids;
    while (reader.next(ids)) {
        out.push_back(ids);
    }
    return out;
}

std::string spans_to_jsonl(std::size_t window_index, const PackedWindow& window)
{
    nlohmann::ordered_json j;
    j["window"] = window_index;
    auto spans = nlohmann::ordered_json::array();
    for (const auto& s : window.spans) {
        spans.push_back({{"doc_id", s.doc_id}, {"start", s.start}, {"end", s.end}, {"chunk", s.chunk}});
    }
    j["spans"] = std::move(spans);
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

} // namespace tkmx
