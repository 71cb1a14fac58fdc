#pragma once

#include "kgrag/embedding.hpp"
#include "kgrag/llm.hpp"
#include "kgrag/retrieval.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

enum class AnswerMode { llm_only, rag, kgrag };

inline constexpr std::array<std::string_view, 3> kAnswerModes{"llm_only", "rag", "kgrag"};

std::string_view to_string(AnswerMode m) noexcept;
std::optional<AnswerMode> parse_answer_mode(std::string_view s) noexcept;

// Slots: {context} and {query}. The material-free variant serves llm_only.
class TutorPromptTemplate {
public:
    TutorPromptTemplate();
    TutorPromptTemplate(std::string with_material, std::string without_material);

    std::string render(std::string_view context, std::string_view query) const;
    std::string render_without_material(std::string_view query) const;

private:
    std::string with_material_;
    std::string without_material_;
};

std::string render_tutor_prompt(std::string_view context_text, std::string_view query,
                                const TutorPromptTemplate& tmpl = {});

struct ChunkRef {
    std::string chunk_id;
    double score = 0.0;
    bool operator==(const ChunkRef&) const = default;
};

struct NodeRef {
    std::string node_id;
    std::string display_name;
    bool operator==(const NodeRef&) const = default;
};

struct AnswerRecord {
    std::string answer_text;
    AnswerMode mode = AnswerMode::kgrag;
    std::vector<ChunkRef> chunks;
    std::vector<NodeRef> nodes;
    std::size_t prompt_token_count = 0;
    std::string provider_name;
    bool cache_hit = false;

    bool operator==(const AnswerRecord&) const = default;
};

nlohmann::json to_json(const AnswerRecord& r);
AnswerRecord answer_from_json(const nlohmann::json& j);

// One consistent view of the stores. graph is null until a graph is built.
struct KnowledgeSnapshot {
    std::shared_ptr<const IndexedCorpus> corpus;
    std::shared_ptr<const IndexedGraph> graph;
};

struct Providers {
    EmbeddingProvider* embedder = nullptr;
    LlmProvider* llm = nullptr;
};

struct GenerationParams {
    RetrievalParams retrieval;
    std::size_t combined_token_cap = 8000;
    TutorPromptTemplate prompt;
};

// llm_only: prompt from the query alone. rag: similarity context. kgrag:
// similarity plus graph-expanded context. Throws ConfigurationError when the
// mode needs a store that is missing; provider failures propagate.
AnswerRecord generate(std::string_view query, AnswerMode mode, const KnowledgeSnapshot& snapshot,
                      const Providers& providers, const GenerationParams& params = {});

}  // namespace kgrag
