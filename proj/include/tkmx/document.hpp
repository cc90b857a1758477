#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace tkmx {

struct DocumentRecord {
    std::string id;
    std::string text;
    std::string lang;
    std::string subset;
    std::optional<std::string> url;

    friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

// One JSON object per line: {"id","text","lang","subset","url"?}.
DocumentRecord parse_document(std::string_view line);
std::string to_jsonl(const DocumentRecord& doc);

// Streams documents from a JSONL source. Blank lines are skipped. Malformed
// lines, repeated ids and languages outside `languages` (when non-empty)
// raise DataError with the line number.
class JsonlReader {
public:
    explicit JsonlReader(std::istream& in, std::set<std::string> languages = {}, bool check_unique_ids = true)
        : in_(&in), languages_(std::move(languages)), check_unique_(check_unique_ids)
    {
    }

    bool next(DocumentRecord& doc);
    std::size_t line() const { return line_; }

private:
    std::istream* in_;
    std::set<std::string> languages_;
    bool check_unique_;
    std::unordered_set<std::string> seen_;
    std::string buf_;
    std::size_t line_ = 0;
};

class JsonlWriter {
public:
    explicit JsonlWriter(std::ostream& out) : out_(&out) {}
    void write(const DocumentRecord& doc) { *out_ << to_jsonl(doc) << '\n'; ++written_; }
    std::size_t written() const { return written_; }

private:
    std::ostream* out_;
    std::size_t written_ = 0;
};

// Whole-file helpers built on the classes above.
std::vector<DocumentRecord> read_documents(const std::filesystem::path& path, bool check_unique_ids = true);
std::vector<DocumentRecord> read_documents(std::istream& in, bool check_unique_ids = true);
std::string to_jsonl(const std::vector<DocumentRecord>& docs);

} // namespace tkmx
