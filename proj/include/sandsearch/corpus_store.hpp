#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandsearch/url.hpp"
#include "sandsearch/util.hpp"

namespace sandsearch {

// One archived web page. `text` is the snapshot taken at ingestion and is never
// mutated afterwards.
struct Document {
    std::string doc_id;
    std::string url;
    std::string title;
    std::string text;
    std::string corpus_id;

    bool operator==(const Document&) const = default;
};

struct CorpusManifest {
    std::string corpus_id;
    std::uint64_t document_count = 0;
    std::uint64_t shard_size = 10000;
    std::string created_at;
};

struct IngestStats {
    std::uint64_t accepted = 0;
    std::uint64_t duplicate_url = 0;
    std::uint64_t duplicate_id = 0;
    std::uint64_t malformed = 0;
};

// Persistent, immutable document store with two keyspaces: doc_id -> document
// and canonical URL -> doc_id. On disk it is a directory holding manifest.json
// plus docs.jsonl (one canonical JSON document per line, ingestion order).
// Ingestion is single-writer; an opened store is read-only and safe for
// unlimited concurrent readers.
class CorpusStore {
public:
    static CorpusStore create(const std::string& dir, const std::string& corpus_id,
                              std::uint64_t shard_size = 10000) {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        CorpusStore store;
        store.dir_ = dir;
        store.writable_ = true;
        store.manifest_.corpus_id = corpus_id;
        store.manifest_.shard_size = shard_size;
        store.manifest_.created_at = iso8601_utc_now();
        store.write_manifest();
        write_file(store.docs_path(), "");
        return store;
    }

    static CorpusStore open(const std::string& dir) {
        CorpusStore store;
        store.dir_ = dir;
        store.writable_ = false;
        store.load_manifest();
        store.load_documents();
        return store;
    }

    // Reads line-delimited JSON records {url, text, doc_id?, title?}. Malformed
    // records and duplicates are counted and skipped, never fatal. Re-ingesting
    // an existing doc_id replaces nothing.
    IngestStats ingest(std::istream& in) {
        if (!writable_) throw ContractError("store is read-only; ingest requires a writable store");
        IngestStats stats;
        std::ofstream out(docs_path(), std::ios::binary | std::ios::app);
        if (!out) throw std::runtime_error("cannot append to " + docs_path());

        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            Document doc;
            if (!parse_record(line, doc)) {
                ++stats.malformed;
                continue;
            }
            const std::string canon = canonicalize_url(doc.url);
            if (doc.doc_id.empty()) doc.doc_id = "u" + to_hex(fnv1a64(canon));
            if (by_id_.count(doc.doc_id)) {
                ++stats.duplicate_id;
                continue;
            }
            if (by_url_.count(canon)) {
                ++stats.duplicate_url;
                continue;
            }
            doc.corpus_id = manifest_.corpus_id;
            out << serialize(doc) << "\n";
            index_document(std::move(doc), canon);
            ++stats.accepted;
        }
        out.flush();
        manifest_.document_count = docs_.size();
        write_manifest();
        return stats;
    }

    const CorpusManifest& manifest() const { return manifest_; }
    std::size_t size() const { return docs_.size(); }

    // Documents in ingestion order; shard assignment depends on this ordering.
    const Document& at(std::size_t i) const { return docs_.at(i); }
    const std::vector<Document>& documents() const { return docs_; }

    std::optional<Document> get_by_id(std::string_view doc_id) const {
        auto it = by_id_.find(std::string(doc_id));
        if (it == by_id_.end()) return std::nullopt;
        return docs_[it->second];
    }

    std::optional<Document> get_by_url(std::string_view url) const {
        if (trim(url).empty()) throw ContractError("get_by_url: url must be non-empty");
        auto it = by_url_.find(canonicalize_url(url));
        if (it == by_url_.end()) return std::nullopt;
        return docs_[it->second];
    }

    const std::string& directory() const { return dir_; }

private:
    std::string docs_path() const { return dir_ + "/docs.jsonl"; }
    std::string manifest_path() const { return dir_ + "/manifest.json"; }

    static bool parse_record(const std::string& line, Document& doc) {
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return false;
        if (!j.contains("url") || !j["url"].is_string()) return false;
        if (!j.contains("text") || !j["text"].is_string()) return false;
        doc.url = j["url"].get<std::string>();
        if (trim(doc.url).empty()) return false;
        doc.text = j["text"].get<std::string>();
        if (j.contains("doc_id")) {
            if (!j["doc_id"].is_string()) return false;
            doc.doc_id = j["doc_id"].get<std::string>();
        }
        if (j.contains("title")) {
            if (!j["title"].is_string()) return false;
            doc.title = j["title"].get<std::string>();
        }
        return true;
    }

    static std::string serialize(const Document& doc) {
        nlohmann::json j{{"doc_id", doc.doc_id},
                         {"url", doc.url},
                         {"title", doc.title},
                         {"text", doc.text}};
        return j.dump();
    }

    void index_document(Document doc, const std::string& canon_url) {
        by_id_.emplace(doc.doc_id, docs_.size());
        by_url_.emplace(canon_url, docs_.size());
        docs_.push_back(std::move(doc));
    }

    void write_manifest() const {
        nlohmann::json j{{"corpus_id", manifest_.corpus_id},
                         {"document_count", manifest_.document_count},
                         {"shard_size", manifest_.shard_size},
                         {"created_at", manifest_.created_at}};
        write_file(manifest_path(), j.dump(2) + "\n");
    }

    void load_manifest() {
        nlohmann::json j = nlohmann::json::parse(read_file(manifest_path()));
        manifest_.corpus_id = j.at("corpus_id").get<std::string>();
        manifest_.document_count = j.at("document_count").get<std::uint64_t>();
        manifest_.shard_size = j.at("shard_size").get<std::uint64_t>();
        manifest_.created_at = j.at("created_at").get<std::string>();
    }

    void load_documents() {
        std::ifstream in(docs_path(), std::ios::binary);
        if (!in) throw ParseError("missing docs file: " + docs_path());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            Document doc;
            if (!parse_record(line, doc) || doc.doc_id.empty()) {
                throw ParseError(docs_path() + ":" + std::to_string(line_no) +
                                 ": corrupt document record");
            }
            doc.corpus_id = manifest_.corpus_id;
            index_document(std::move(doc), canonicalize_url(doc.url));
        }
        if (docs_.size() != manifest_.document_count) {
            throw ParseError("manifest count " + std::to_string(manifest_.document_count) +
                             " does not match stored documents " + std::to_string(docs_.size()));
        }
    }

    std::string dir_;
    bool writable_ = false;
    CorpusManifest manifest_;
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::size_t> by_url_;
};

}  // namespace sandsearch
