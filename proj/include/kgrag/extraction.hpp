#pragma once

#include "kgrag/corpus.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/llm.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

inline constexpr std::string_view kExtractionInstruction =
    "Extract entities and relationships from the following text in "
    "[Entity1, Relationship, Entity2] format";

// Prompt template with a single "{text}" slot for the chunk.
class ExtractionPromptTemplate {
public:
    ExtractionPromptTemplate();  // instruction, blank line, chunk text
    explicit ExtractionPromptTemplate(std::string text);  // throws ContractViolation without the slot

    const std::string& text() const noexcept { return text_; }
    std::string render(std::string_view chunk_text) const;

private:
    std::string text_;
};

std::string render_extraction_prompt(const Chunk& chunk,
                                     const ExtractionPromptTemplate& tmpl = {});

struct ParsedTriples {
    std::vector<Triple> triples;  // status pending, source_chunk_id set
    std::vector<std::string> warnings;
};

// Total scanner for flat "[a, b, c]" groups. Anything else becomes a warning.
ParsedTriples parse_triples(std::string_view raw, const std::string& chunk_id);

struct ExtractionRun {
    std::string run_id;
    std::string chunk_id;
    std::string raw_llm_output;
    std::vector<Triple> parsed;
    std::vector<std::string> warnings;
    std::optional<std::string> error;

    bool ok() const noexcept { return !error.has_value(); }
};

struct ExtractionOptions {
    int max_in_flight = 8;
    double max_failure_fraction = 0.5;  // more failed chunks than this aborts the pipeline
};

// One run per chunk, in corpus chunk order. Per-chunk provider failures are
// recorded on the run; throws ExtractionFailed when too many chunks fail.
std::vector<ExtractionRun> extract_corpus(const Corpus& corpus, LlmProvider& llm,
                                          const ExtractionPromptTemplate& tmpl = {},
                                          const ExtractionOptions& opts = {});

class ExtractionFailed : public PipelineError {
public:
    ExtractionFailed(const std::string& what, std::vector<ExtractionRun> runs)
        : PipelineError(what), runs_(std::move(runs)) {}
    const std::vector<ExtractionRun>& runs() const noexcept { return runs_; }

private:
    std::vector<ExtractionRun> runs_;
};

nlohmann::json run_to_json(const ExtractionRun& run);
// One JSON object per line.
std::string runs_to_jsonl(const std::vector<ExtractionRun>& runs);

}  // namespace kgrag
