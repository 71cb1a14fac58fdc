#include "kgrag/corpus.hpp"

#include "kgrag/csv.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

namespace fs = std::filesystem;

namespace kgrag {

namespace {

constexpr const char* kChunksHeader = "chunk_id,doc_id,ordinal,token_count,text";

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

bool is_ingestible(const fs::path& p) {
    const auto ext = to_lower_ascii(p.extension().string());
    return ext == ".txt" || ext == ".md" || ext == ".markdown";
}

std::size_t parse_size(const std::string& s, const std::string& what, std::size_t line) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw FormatError("chunks.csv line " + std::to_string(line) + ": bad " + what + " '" +
                          s + "'");
    }
}

}  // namespace

void CorpusConfig::validate() const {
    if (chunk_size < 1) throw ContractViolation("chunk_size must be >= 1");
    if (overlap >= chunk_size) throw ContractViolation("overlap must be smaller than chunk_size");
}

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", ordinal);
    return std::string(doc_id) + "-" + buf;
}

std::vector<Chunk> chunk_document(const Document& doc, const CorpusConfig& cfg) {
    cfg.validate();
    const auto tokens = tokenize(doc.body);
    std::vector<Chunk> out;
    const std::size_t step = cfg.chunk_size - cfg.overlap;
    for (std::size_t start = 0; start < tokens.size(); start += step) {
        const std::size_t end = std::min(tokens.size(), start + cfg.chunk_size);
        Chunk c;
        c.doc_id = doc.doc_id;
        c.ordinal = out.size();
        c.chunk_id = make_chunk_id(doc.doc_id, c.ordinal);
        c.text = join_tokens(tokens, start, end);
        c.token_count = end - start;
        out.push_back(std::move(c));
        if (end == tokens.size()) break;
    }
    return out;
}

bool is_valid_doc_id(std::string_view doc_id) {
    if (doc_id.empty() || doc_id.front() == '.') return false;
    return std::all_of(doc_id.begin(), doc_id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '.' || c == '_' || c == '-';
    });
}

std::string doc_id_from_stem(std::string_view stem) {
    std::string out;
    for (char c : stem) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
    }
    while (!out.empty() && out.front() == '.') out.front() = '_';
    if (out.empty()) out = "doc";
    return out;
}

Corpus::Corpus(CorpusConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::size_t Corpus::ingest_text(const std::string& doc_id, const std::string& title,
                                const std::string& body) {
    if (!is_valid_doc_id(doc_id)) {
        throw ContractViolation("invalid doc_id '" + doc_id +
                                "' (allowed: letters, digits, '.', '_', '-')");
    }
    if (!is_valid_utf8(body)) throw EncodingError("document '" + doc_id + "' is not valid UTF-8");
    Document doc{doc_id, title, body};
    auto chunks = chunk_document(doc, cfg_);
    const std::size_t n = chunks.size();
    docs_[doc_id] = std::move(doc);
    chunks_[doc_id] = std::move(chunks);
    reindex(doc_id);
    return n;
}

std::string Corpus::ingest_file(const std::string& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw IngestError(path, "cannot read file");
    const std::string body = read_file(path);
    if (!is_valid_utf8(body)) throw EncodingError("file is not valid UTF-8: " + path);
    const fs::path p(path);
    const std::string doc_id = doc_id_from_stem(p.stem().string());
    ingest_text(doc_id, p.stem().string(), body);
    return doc_id;
}

std::vector<std::string> Corpus::ingest_path(const std::string& path) {
    std::error_code ec;
    if (!fs::is_directory(path, ec)) return {ingest_file(path)};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && is_ingestible(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<std::string> ids;
    for (const auto& f : files) ids.push_back(ingest_file(f.string()));
    return ids;
}

std::size_t Corpus::chunk_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [id, cs] : chunks_) n += cs.size();
    return n;
}

std::vector<Document> Corpus::documents() const {
    std::vector<Document> out;
    out.reserve(docs_.size());
    for (const auto& [id, d] : docs_) out.push_back(d);
    return out;
}

const Document* Corpus::find_document(std::string_view doc_id) const {
    auto it = docs_.find(doc_id);
    return it == docs_.end() ? nullptr : &it->second;
}

std::vector<Chunk> Corpus::chunks() const {
    std::vector<Chunk> out;
    for (const auto& [id, cs] : chunks_) out.insert(out.end(), cs.begin(), cs.end());
    return out;
}

const Chunk* Corpus::find_chunk(std::string_view chunk_id) const {
    auto it = chunk_index_.find(chunk_id);
    if (it == chunk_index_.end()) return nullptr;
    const auto& [doc_id, idx] = it->second;
    return &chunks_.find(doc_id)->second[idx];
}

void Corpus::reindex(const std::string& doc_id) {
    std::erase_if(chunk_index_, [&](const auto& kv) { return kv.second.first == doc_id; });
    const auto& cs = chunks_[doc_id];
    for (std::size_t i = 0; i < cs.size(); ++i) chunk_index_[cs[i].chunk_id] = {doc_id, i};
}

void Corpus::save(const std::string& dir) const {
    const fs::path root(dir);
    fs::create_directories(root / "docs");
    for (const auto& entry : fs::directory_iterator(root / "docs")) {
        if (entry.path().extension() == ".txt" &&
            !docs_.contains(entry.path().stem().string())) {
            fs::remove(entry.path());
        }
    }
    for (const auto& [id, d] : docs_) write_file_atomic((root / "docs" / (id + ".txt")).string(), d.body);
    std::string table = std::string(kChunksHeader) + "\r\n";
    for (const auto& c : chunks()) {
        table += csv::format_row({c.chunk_id, c.doc_id, std::to_string(c.ordinal),
                                  std::to_string(c.token_count), c.text});
    }
    write_file_atomic((root / "chunks.csv").string(), table);
}

Corpus Corpus::load(const std::string& dir, CorpusConfig cfg) {
    Corpus corpus(cfg);
    const fs::path root(dir);
    std::error_code ec;
    if (!fs::is_directory(root / "docs", ec)) return corpus;
    for (const auto& entry : fs::directory_iterator(root / "docs")) {
        if (entry.path().extension() != ".txt") continue;
        const std::string id = entry.path().stem().string();
        const std::string body = read_file(entry.path().string());
        if (!is_valid_utf8(body)) throw EncodingError("stored document is not valid UTF-8: " + id);
        corpus.docs_[id] = Document{id, id, body};
        corpus.chunks_[id];
    }
    const fs::path table = root / "chunks.csv";
    if (!fs::exists(table)) {
        for (const auto& [id, d] : corpus.docs_) {
            corpus.chunks_[id] = chunk_document(d, corpus.cfg_);
            corpus.reindex(id);
        }
        return corpus;
    }
    const auto records = csv::parse(read_file(table.string()));
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (r == 0) {
            if (csv::format_row(rec.fields) != std::string(kChunksHeader) + "\r\n") {
                throw FormatError("chunks.csv: unexpected header");
            }
            continue;
        }
        if (rec.fields.size() != 5) {
            throw FormatError("chunks.csv line " + std::to_string(rec.line) + ": expected 5 fields");
        }
        Chunk c;
        c.chunk_id = rec.fields[0];
        c.doc_id = rec.fields[1];
        c.ordinal = parse_size(rec.fields[2], "ordinal", rec.line);
        c.token_count = parse_size(rec.fields[3], "token_count", rec.line);
        c.text = rec.fields[4];
        auto it = corpus.chunks_.find(c.doc_id);
        if (it == corpus.chunks_.end()) {
            throw FormatError("chunks.csv line " + std::to_string(rec.line) +
                              ": unknown doc_id '" + c.doc_id + "'");
        }
        it->second.push_back(std::move(c));
    }
    for (auto& [id, cs] : corpus.chunks_) {
        std::sort(cs.begin(), cs.end(),
                  [](const Chunk& a, const Chunk& b) { return a.ordinal < b.ordinal; });
        corpus.reindex(id);
    }
    return corpus;
}

}  // namespace kgrag
