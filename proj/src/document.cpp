#include "tkmx/document.hpp"

#include "tkmx/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace tkmx {

DocumentRecord parse_document(std::string_view line)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw DataError("record is not a JSON object");
    }
    auto field = [&](const char* name) -> std::string {
        const auto it = j.find(name);
        if (it == j.end() || !it->is_string()) {
            throw DataError(std::string("missing string field '") + name + "'");
        }
        return it->get<std::string>();
    };
    DocumentRecord doc;
    doc.id = field("id");
    doc.text = field("text");
    doc.lang = field("lang");
    doc.subset = field("subset");
    if (const auto it = j.find("url"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw DataError("field 'url' must be a string");
        }
        doc.url = it->get<std::string>();
    }
    return doc;
}

std::string to_jsonl(const DocumentRecord& doc)
{
    nlohmann::ordered_json j;
    j["id"] = doc.id;
    j["text"] = doc.text;
    j["lang"] = doc.lang;
    j["subset"] = doc.subset;
    if (doc.url) {
        j["url"] = *doc.url;
    }
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

bool JsonlReader::next(DocumentRecord& doc)
{
    while (std::getline(*in_, buf_)) {
        ++line_;
        if (buf_.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            doc = parse_document(buf_);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_) + ": " + e.what());
        }
        if (!languages_.empty() && !languages_.contains(doc.lang)) {
            throw DataError("line " + std::to_string(line_) + ": language '" + doc.lang +
                            "' is not in the declared language set");
        }
        if (check_unique_ && !seen_.insert(doc.id).second) {
            throw DataError("line " + std::to_string(line_) + ": duplicate document id '" + doc.id + "'");
        }
        return true;
    }
    return false;
}

std::vector<DocumentRecord> read_documents(std::istream& in, bool check_unique_ids)
{
    JsonlReader reader(in, {}, check_unique_ids);
    std::vector<DocumentRecord> docs;
    DocumentRecord doc;
    while (reader.next(doc)) {
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<DocumentRecord> read_documents(const std::filesystem::path& path, bool check_unique_ids)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return read_documents(in, check_unique_ids);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string to_jsonl(const std::vector<DocumentRecord>& docs)
{
    std::string out;
    for (const auto& d : docs) {
        out += to_jsonl(d);
        out += '\n';
    }
    return out;
}

} // namespace tkmx
