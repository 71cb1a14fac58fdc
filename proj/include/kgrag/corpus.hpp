#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
};

// A contiguous token window of one document; the unit of similarity retrieval.
struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::size_t ordinal = 0;
    std::string text;  // tokens joined by single spaces
    std::size_t token_count = 0;

    bool operator==(const Chunk&) const = default;
};

struct CorpusConfig {
    std::size_t chunk_size = 1000;
    std::size_t overlap = 0;

    // Throws ContractViolation unless chunk_size >= 1 and overlap < chunk_size.
    void validate() const;
};

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal);

// With overlap 0 the chunks partition tokenize(doc.body); the last one may be short.
std::vector<Chunk> chunk_document(const Document& doc, const CorpusConfig& cfg);

// True when doc_id is safe to use as a file stem: [A-Za-z0-9._-], not starting with '.'.
bool is_valid_doc_id(std::string_view doc_id);
// Maps an arbitrary file stem onto a valid doc_id.
std::string doc_id_from_stem(std::string_view stem);

// The knowledge base: documents plus their chunks. Mutations must be
// serialized by the owner; const access is safe from many threads.
class Corpus {
public:
    explicit Corpus(CorpusConfig cfg = {});

    const CorpusConfig& config() const noexcept { return cfg_; }

    // Stores (or replaces) a document and re-chunks it. Returns its chunk count.
    std::size_t ingest_text(const std::string& doc_id, const std::string& title,
                            const std::string& body);
    // Ingests one .txt/.md file; doc_id is derived from the file stem.
    // Throws IngestError for unreadable files and EncodingError for non-UTF-8 bytes.
    std::string ingest_file(const std::string& path);
    // A file or every .txt/.md file directly inside a directory, in name order.
    std::vector<std::string> ingest_path(const std::string& path);

    std::size_t document_count() const noexcept { return docs_.size(); }
    std::size_t chunk_count() const noexcept;
    std::vector<Document> documents() const;
    const Document* find_document(std::string_view doc_id) const;

    // All chunks ordered by doc_id then ordinal.
    std::vector<Chunk> chunks() const;
    const Chunk* find_chunk(std::string_view chunk_id) const;

    // Directory layout: docs/<doc_id>.txt and chunks.csv.
    void save(const std::string& dir) const;
    static Corpus load(const std::string& dir, CorpusConfig cfg = {});

private:
    CorpusConfig cfg_;
    std::map<std::string, Document, std::less<>> docs_;
    std::map<std::string, std::vector<Chunk>, std::less<>> chunks_;
    std::map<std::string, std::pair<std::string, std::size_t>, std::less<>> chunk_index_;

    void reindex(const std::string& doc_id);
};

}  // namespace kgrag
