#include "kgrag/extraction.hpp"

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <thread>

namespace kgrag {

namespace {
constexpr std::string_view kSlot = "{text}";
}

ExtractionPromptTemplate::ExtractionPromptTemplate()
    : text_(std::string(kExtractionInstruction) + ":\n\n" + std::string(kSlot)) {}

ExtractionPromptTemplate::ExtractionPromptTemplate(std::string text) : text_(std::move(text)) {
    if (text_.find(kSlot) == std::string::npos) {
        throw ContractViolation("extraction template needs a {text} slot");
    }
}

std::string ExtractionPromptTemplate::render(std::string_view chunk_text) const {
    std::string out;
    std::size_t pos = 0;
    for (;;) {
        const auto hit = text_.find(kSlot, pos);
        if (hit == std::string::npos) break;
        out.append(text_, pos, hit - pos);
        out.append(chunk_text);
        pos = hit + kSlot.size();
    }
    out.append(text_, pos);
    return out;
}

std::string render_extraction_prompt(const Chunk& chunk, const ExtractionPromptTemplate& tmpl) {
    return tmpl.render(chunk.text);
}

ParsedTriples parse_triples(std::string_view raw, const std::string& chunk_id) {
    ParsedTriples out;
    std::size_t i = 0;
    while (i < raw.size()) {
        const auto open = raw.find('[', i);
        if (open == std::string_view::npos) break;
        // find the matching close bracket, noting nesting
        int depth = 0;
        bool nested = false;
        std::size_t close = std::string_view::npos;
        for (std::size_t j = open; j < raw.size(); ++j) {
            if (raw[j] == '[') {
                if (++depth > 1) nested = true;
            } else if (raw[j] == ']') {
                if (--depth == 0) {
                    close = j;
                    break;
                }
            }
        }
        if (close == std::string_view::npos) {
            out.warnings.push_back("unclosed '[' at offset " + std::to_string(open));
            // a later group may still be complete
            i = open + 1;
            continue;
        }
        const std::string_view group = raw.substr(open + 1, close - open - 1);
        i = close + 1;
        if (nested) {
            out.warnings.push_back("nested brackets in group at offset " + std::to_string(open) +
                                   "; skipped");
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = group.find(',', start);
            fields.push_back(trim(group.substr(start, comma == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 3) {
            out.warnings.push_back("group at offset " + std::to_string(open) + " has " +
                                   std::to_string(fields.size()) + " fields, expected 3");
            continue;
        }
        if (std::any_of(fields.begin(), fields.end(), [](const std::string& f) { return f.empty(); })) {
            out.warnings.push_back("group at offset " + std::to_string(open) + " has an empty field");
            continue;
        }
        out.triples.push_back(make_triple(fields[0], fields[1], fields[2], chunk_id));
    }
    return out;
}

std::vector<ExtractionRun> extract_corpus(const Corpus& corpus, LlmProvider& llm,
                                          const ExtractionPromptTemplate& tmpl,
                                          const ExtractionOptions& opts) {
    const auto chunks = corpus.chunks();
    std::vector<ExtractionRun> runs(chunks.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < chunks.size(); i = next++) {
            const Chunk& c = chunks[i];
            ExtractionRun& run = runs[i];
            run.run_id = "extract-" + c.chunk_id;
            run.chunk_id = c.chunk_id;
            try {
                run.raw_llm_output = llm.complete({"", render_extraction_prompt(c, tmpl), c.chunk_id});
                auto parsed = parse_triples(run.raw_llm_output, c.chunk_id);
                run.parsed = std::move(parsed.triples);
                run.warnings = std::move(parsed.warnings);
            } catch (const std::exception& e) {
                run.error = e.what();
            }
        }
    };
    const std::size_t n_workers =
        std::min<std::size_t>(std::max(1, opts.max_in_flight), std::max<std::size_t>(1, chunks.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    const auto failed = static_cast<std::size_t>(
        std::count_if(runs.begin(), runs.end(), [](const ExtractionRun& r) { return !r.ok(); }));
    if (!runs.empty() &&
        static_cast<double>(failed) > opts.max_failure_fraction * static_cast<double>(runs.size())) {
        const std::string msg = "extraction failed on " + std::to_string(failed) + " of " +
                                std::to_string(runs.size()) + " chunks";
        throw ExtractionFailed(msg, std::move(runs));
    }
    return runs;
}

nlohmann::json run_to_json(const ExtractionRun& run) {
    nlohmann::json triples = nlohmann::json::array();
    for (const auto& t : run.parsed) {
        triples.push_back({{"subject", t.subject}, {"predicate", t.predicate}, {"object", t.object}});
    }
    nlohmann::json j = {{"run_id", run.run_id},
                        {"chunk_id", run.chunk_id},
                        {"raw_llm_output", run.raw_llm_output},
                        {"triples", std::move(triples)},
                        {"warnings", run.warnings},
                        {"error", nullptr}};
    if (run.error) j["error"] = *run.error;
    return j;
}

std::string runs_to_jsonl(const std::vector<ExtractionRun>& runs) {
    std::string out;
    for (const auto& r : runs) {
        out += run_to_json(r).dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace kgrag
