#include "tkmx/bpe.hpp"

#include "tkmx/error.hpp"
#include "tkmx/unicode.hpp"

#include <algorithm>
#include <queue>
#include <thread>
#include <unordered_set>

namespace tkmx {

// ---------------------------------------------------------------------------
// Pretoken counting

void PretokenCounter::add_document(std::string_view text)
{
    ++documents_;
    for (auto piece : pretokenize(pretokenizer_, text)) {
        add_piece(piece);
    }
}

void PretokenCounter::add_piece(std::string_view piece, std::uint64_t count)
{
    auto it = counts_.find(std::string(piece));
    if (it == counts_.end()) {
        counts_.emplace(std::string(piece), count);
    } else {
        it->second += count;
    }
}

void PretokenCounter::merge(const PretokenCounter& other)
{
    documents_ += other.documents_;
    for (const auto& [piece, count] : other.counts_) {
        counts_[piece] += count;
    }
}

std::vector<std::pair<std::string, std::uint64_t>> PretokenCounter::sorted() const
{
    std::vector<std::pair<std::string, std::uint64_t>> out(counts_.begin(), counts_.end());
    std::sort(out.begin(), out.end());
    return out;
}

PretokenCounter count_pretokens(std::span<const std::string> docs, Pretokenizer pretokenizer,
                                std::size_t threads)
{
    threads = std::max<std::size_t>(1, std::min(threads, docs.size()));
    if (threads == 1) {
        PretokenCounter counter(pretokenizer);
        for (const auto& d : docs) {
            counter.add_document(d);
        }
        return counter;
    }
    std::vector<PretokenCounter> shards(threads, PretokenCounter(pretokenizer));
    std::vector<std::thread> workers;
    const std::size_t chunk = (docs.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(docs.size(), begin + chunk);
            for (std::size_t i = begin; i < end; ++i) {
                shards[t].add_document(docs[i]);
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    for (std::size_t t = 1; t < threads; ++t) {
        shards[0].merge(shards[t]);
    }
    return std::move(shards[0]);
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Word {
    std::vector<TokenId> syms;
    std::uint64_t freq = 0;
};

struct HeapEntry {
    std::int64_t count;
    TokenId left;
    TokenId right;
};

// std::priority_queue pops the "largest": highest count, then lowest ids.
struct HeapLess {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const
    {
        if (a.count != b.count) {
            return a.count < b.count;
        }
        if (a.left != b.left) {
            return a.left > b.left;
        }
        return a.right > b.right;
    }
};

bool contains_pair(const std::vector<TokenId>& syms, TokenId a, TokenId b)
{
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        if (syms[i] == a && syms[i + 1] == b) {
            return true;
        }
    }
    return false;
}

void merge_in_place(std::vector<TokenId>& syms, TokenId a, TokenId b, TokenId z)
{
    std::size_t w = 0;
    for (std::size_t r = 0; r < syms.size();) {
        if (r + 1 < syms.size() && syms[r] == a && syms[r + 1] == b) {
            syms[w++] = z;
            r += 2;
        } else {
            syms[w++] = syms[r++];
        }
    }
    syms.resize(w);
}

} // namespace

TrainResult train(const PretokenCounter& counter, const TrainOptions& options)
{
    const std::size_t minimum = kNumBaseTokens + options.specials.size();
    if (options.target_size < minimum) {
        throw ConfigError("target size " + std::to_string(options.target_size) + " is below the minimum " +
                          std::to_string(minimum));
    }
    if (counter.documents() == 0 && counter.counts().empty()) {
        throw DataError("training corpus is empty");
    }
    const ByteOrder order = options.base_order.value_or(identity_byte_order());
    std::array<TokenId, kNumBaseTokens> byte_to_id{};
    std::vector<std::string> token_bytes;
    for (TokenId id = 0; id < kNumBaseTokens; ++id) {
        byte_to_id[order[id]] = id;
        token_bytes.emplace_back(1, static_cast<char>(order[id]));
    }
    std::unordered_set<std::string> existing(token_bytes.begin(), token_bytes.end());

    std::vector<Word> words;
    for (auto& [piece, freq] : counter.sorted()) {
        Word w;
        w.freq = freq;
        w.syms.reserve(piece.size());
        for (unsigned char c : piece) {
            w.syms.push_back(byte_to_id[c]);
        }
        words.push_back(std::move(w));
    }

    std::unordered_map<std::uint64_t, std::int64_t> counts;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;
    for (std::uint32_t wi = 0; wi < words.size(); ++wi) {
        const auto& syms = words[wi].syms;
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            const auto key = pair_key(syms[i], syms[i + 1]);
            counts[key] += static_cast<std::int64_t>(words[wi].freq);
            auto& list = where[key];
            if (list.empty() || list.back() != wi) {
                list.push_back(wi);
            }
        }
    }

    std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap;
    for (const auto& [key, count] : counts) {
        heap.push({count, static_cast<TokenId>(key >> 32), static_cast<TokenId>(key & 0xFFFFFFFFu)});
    }

    const std::size_t budget = options.target_size - minimum;
    std::vector<MergeRule> merges;
    std::unordered_set<std::uint64_t> banned;
    std::unordered_map<std::uint64_t, std::int64_t> delta;
    bool exhausted = false;
    bool stopped = false;

    while (merges.size() < budget) {
        if (heap.empty()) {
            exhausted = true;
            break;
        }
        const HeapEntry top = heap.top();
        heap.pop();
        const auto key = pair_key(top.left, top.right);
        const auto cit = counts.find(key);
        if (cit == counts.end() || cit->second != top.count || banned.contains(key)) {
            continue;
        }
        if (top.count < static_cast<std::int64_t>(options.min_frequency)) {
            exhausted = true;
            break;
        }
        std::string bytes = token_bytes[top.left] + token_bytes[top.right];
        if (existing.contains(bytes)) {
            banned.insert(key);
            continue;
        }
        const auto z = static_cast<TokenId>(kNumBaseTokens + merges.size());
        merges.push_back({top.left, top.right});
        existing.insert(bytes);
        token_bytes.push_back(bytes);

        auto affected = std::move(where[key]);
        where.erase(key);
        std::sort(affected.begin(), affected.end());
        affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

        delta.clear();
        for (auto wi : affected) {
            auto& w = words[wi];
            if (!contains_pair(w.syms, top.left, top.right)) {
                continue;
            }
            const auto f = static_cast<std::int64_t>(w.freq);
            for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
                delta[pair_key(w.syms[i], w.syms[i + 1])] -= f;
            }
            merge_in_place(w.syms, top.left, top.right, z);
            for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
                const auto k = pair_key(w.syms[i], w.syms[i + 1]);
                delta[k] += f;
                if (w.syms[i] == z || w.syms[i + 1] == z) {
                    auto& list = where[k];
                    if (list.empty() || list.back() != wi) {
                        list.push_back(wi);
                    }
                }
            }
        }
        for (const auto& [k, d] : delta) {
            if (d == 0) {
                continue;
            }
            auto& c = counts[k];
            c += d;
            if (c <= 0) {
                counts.erase(k);
                continue;
            }
            heap.push({c, static_cast<TokenId>(k >> 32), static_cast<TokenId>(k & 0xFFFFFFFFu)});
        }

        if (options.on_merge && !options.on_merge(bytes)) {
            stopped = true;
            break;
        }
    }

    return TrainResult{Vocabulary(order, std::move(merges), options.specials, counter.pretokenizer()),
                       exhausted, stopped};
}

TrainResult train(std::span<const std::string> docs, const TrainOptions& options, Pretokenizer pretokenizer,
                  std::size_t threads)
{
    if (docs.empty()) {
        throw DataError("training corpus is empty");
    }
    return train(count_pretokens(docs, pretokenizer, threads), options);
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

struct PieceHeapEntry {
    std::uint32_t rank;
    std::uint32_t pos;
    bool operator>(const PieceHeapEntry& o) const
    {
        return rank != o.rank ? rank > o.rank : pos > o.pos;
    }
};

} // namespace

void encode_piece(const Vocabulary& vocab, std::string_view piece, std::vector<TokenId>& out)
{
    const std::size_t n = piece.size();
    if (n == 0) {
        return;
    }
    if (n == 1) {
        out.push_back(vocab.byte_token(static_cast<std::uint8_t>(piece[0])));
        return;
    }
    constexpr std::uint32_t kEnd = 0xFFFFFFFFu;
    std::vector<TokenId> ids(n);
    std::vector<std::uint32_t> next(n);
    std::vector<std::uint32_t> prev(n);
    std::vector<bool> alive(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = vocab.byte_token(static_cast<std::uint8_t>(piece[i]));
        next[i] = i + 1 < n ? static_cast<std::uint32_t>(i + 1) : kEnd;
        prev[i] = i > 0 ? static_cast<std::uint32_t>(i - 1) : kEnd;
    }
    std::priority_queue<PieceHeapEntry, std::vector<PieceHeapEntry>, std::greater<>> heap;
    auto push_pair = [&](std::uint32_t i) {
        if (i == kEnd || next[i] == kEnd) {
            return;
        }
        if (auto r = vocab.merge_rank(ids[i], ids[next[i]])) {
            heap.push({*r, i});
        }
    };
    for (std::uint32_t i = 0; i + 1 < n; ++i) {
        push_pair(i);
    }
    while (!heap.empty()) {
        const auto [rank, i] = heap.top();
        heap.pop();
        if (!alive[i] || next[i] == kEnd) {
            continue;
        }
        const auto j = next[i];
        const auto r = vocab.merge_rank(ids[i], ids[j]);
        if (!r || *r != rank) {
            continue;
        }
        ids[i] = static_cast<TokenId>(kNumBaseTokens + rank);
        alive[j] = false;
        next[i] = next[j];
        if (next[j] != kEnd) {
            prev[next[j]] = i;
        }
        push_pair(prev[i]);
        push_pair(i);
    }
    for (std::uint32_t i = 0; i != kEnd; i = next[i]) {
        out.push_back(ids[i]);
    }
}

std::vector<TokenId> encode(const Vocabulary& vocab, std::string_view text)
{
    std::vector<TokenId> out;
    for (auto piece : pretokenize(vocab.pretokenizer(), text)) {
        encode_piece(vocab, piece, out);
    }
    return out;
}

std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids, bool lossy)
{
    std::string out;
    for (auto id : ids) {
        out += vocab.bytes(id);
    }
    if (!unicode::is_valid_utf8(out)) {
        if (!lossy) {
            throw DataError("decoded bytes are not valid UTF-8");
        }
        return unicode::to_valid_utf8(out);
    }
    return out;
}

const std::vector<TokenId>& CachingEncoder::piece(std::string_view p)
{
    if (auto it = cache_.find(std::string(p)); it != cache_.end()) {
        return it->second;
    }
    scratch_.clear();
    encode_piece(*vocab_, p, scratch_);
    if (cache_.size() >= max_entries_) {
        return scratch_;
    }
    return cache_.emplace(std::string(p), scratch_).first->second;
}

void CachingEncoder::encode(std::string_view text, std::vector<TokenId>& out)
{
    for (auto p : pretokenize(vocab_->pretokenizer(), text)) {
        const auto& ids = piece(p);
        out.insert(out.end(), ids.begin(), ids.end());
    }
}

std::vector<TokenId> CachingEncoder::encode(std::string_view text)
{
    std::vector<TokenId> out;
    encode(text, out);
    return out;
}

std::size_t CachingEncoder::count(std::string_view text)
{
    std::size_t n = 0;
    for (auto p : pretokenize(vocab_->pretokenizer(), text)) {
        n += piece(p).size();
    }
    return n;
}

} // namespace tkmx
