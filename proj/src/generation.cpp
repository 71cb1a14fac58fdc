#include "kgrag/generation.hpp"

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <nlohmann/json.hpp>

namespace kgrag {

std::string_view to_string(AnswerMode m) noexcept { return kAnswerModes[static_cast<std::size_t>(m)]; }

std::optional<AnswerMode> parse_answer_mode(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kAnswerModes.size(); ++i) {
        if (kAnswerModes[i] == s) return static_cast<AnswerMode>(i);
    }
    return std::nullopt;
}

namespace {

constexpr std::string_view kContextSlot = "{context}";
constexpr std::string_view kQuerySlot = "{query}";

std::string substitute(std::string_view tmpl, std::string_view context, std::string_view query) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.substr(i, kContextSlot.size()) == kContextSlot) {
            out += context;
            i += kContextSlot.size();
        } else if (tmpl.substr(i, kQuerySlot.size()) == kQuerySlot) {
            out += query;
            i += kQuerySlot.size();
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

}  // namespace

// Slots sit on their own whitespace boundaries so that the prompt's token
// count is exactly template + context + query.
TutorPromptTemplate::TutorPromptTemplate()
    : TutorPromptTemplate(
          "You are an expert tutor. Using the following course material:\n\n{context}\n\n"
          "Please answer the student's question: {query}\n\n"
          "Explain concepts clearly with detail.",
          "You are an expert tutor. Please answer the student's question: {query}\n\n"
          "Explain concepts clearly with detail.") {}

TutorPromptTemplate::TutorPromptTemplate(std::string with_material, std::string without_material)
    : with_material_(std::move(with_material)), without_material_(std::move(without_material)) {
    if (with_material_.find(kContextSlot) == std::string::npos ||
        with_material_.find(kQuerySlot) == std::string::npos) {
        throw ContractViolation("tutor template needs {context} and {query} slots");
    }
    if (without_material_.find(kQuerySlot) == std::string::npos) {
        throw ContractViolation("material-free tutor template needs a {query} slot");
    }
}

std::string TutorPromptTemplate::render(std::string_view context, std::string_view query) const {
    return substitute(with_material_, context, query);
}

std::string TutorPromptTemplate::render_without_material(std::string_view query) const {
    return substitute(without_material_, {}, query);
}

std::string render_tutor_prompt(std::string_view context_text, std::string_view query,
                                const TutorPromptTemplate& tmpl) {
    return tmpl.render(context_text, query);
}

nlohmann::json to_json(const AnswerRecord& r) {
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& c : r.chunks) chunks.push_back({{"chunk_id", c.chunk_id}, {"score", c.score}});
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : r.nodes) nodes.push_back({{"node_id", n.node_id}, {"display_name", n.display_name}});
    return {{"answer_text", r.answer_text},
            {"mode", to_string(r.mode)},
            {"chunk_refs", std::move(chunks)},
            {"node_refs", std::move(nodes)},
            {"prompt_token_count", r.prompt_token_count},
            {"provider_name", r.provider_name},
            {"cache_hit", r.cache_hit}};
}

AnswerRecord answer_from_json(const nlohmann::json& j) {
    try {
        AnswerRecord r;
        r.answer_text = j.at("answer_text").get<std::string>();
        const auto mode = parse_answer_mode(j.at("mode").get<std::string>());
        if (!mode) throw FormatError("unknown answer mode");
        r.mode = *mode;
        for (const auto& c : j.at("chunk_refs")) {
            r.chunks.push_back({c.at("chunk_id").get<std::string>(), c.at("score").get<double>()});
        }
        for (const auto& n : j.at("node_refs")) {
            r.nodes.push_back({n.at("node_id").get<std::string>(), n.at("display_name").get<std::string>()});
        }
        r.prompt_token_count = j.at("prompt_token_count").get<std::size_t>();
        r.provider_name = j.at("provider_name").get<std::string>();
        r.cache_hit = j.value("cache_hit", false);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed answer record: ") + e.what());
    }
}

AnswerRecord generate(std::string_view query, AnswerMode mode, const KnowledgeSnapshot& snapshot,
                      const Providers& providers, const GenerationParams& params) {
    if (providers.llm == nullptr) throw ConfigurationError("no LLM provider configured");
    if (mode != AnswerMode::llm_only && providers.embedder == nullptr) {
        throw ConfigurationError("no embedding provider configured");
    }
    if (mode != AnswerMode::llm_only && !snapshot.corpus) {
        throw ConfigurationError("mode " + std::string(to_string(mode)) + " needs a corpus");
    }
    if (mode == AnswerMode::kgrag && !snapshot.graph) {
        throw ConfigurationError("mode kgrag needs a built knowledge graph");
    }

    AnswerRecord record;
    record.mode = mode;
    record.provider_name = providers.llm->name();
    std::string prompt;

    if (mode == AnswerMode::llm_only) {
        prompt = params.prompt.render_without_material(query);
    } else {
        const EmbeddingVector q = providers.embedder->embed(query);
        const SimilarityContext sim = rag_retrieve(q, *snapshot.corpus, params.retrieval);
        ExpandedContext exp;
        if (mode == AnswerMode::kgrag) exp = kgr_retrieve(q, *snapshot.graph, params.retrieval);
        const AssembledContext ctx = assemble_contexts_detailed(sim, exp, params.combined_token_cap);
        prompt = params.prompt.render(ctx.text, query);

        // provenance lists only what survived the combined cap
        std::size_t offset = 0;
        for (std::size_t i = 0; i < sim.chunk_ids.size() && offset < ctx.similarity_tokens; ++i) {
            record.chunks.push_back({sim.chunk_ids[i], sim.scores[i]});
            offset += snapshot.corpus->find_chunk(sim.chunk_ids[i])->token_count;
        }
        offset = 0;
        for (const auto& id : exp.context_node_ids) {
            if (offset >= ctx.graph_tokens) break;
            const KgNode* n = snapshot.graph->graph.find_node(id);
            record.nodes.push_back({id, n->display_name});
            offset += count_tokens(n->context) + 1 + count_tokens(n->display_name);
        }
    }
    record.prompt_token_count = count_tokens(prompt);
    record.answer_text = providers.llm->complete({"", prompt, {}});
    return record;
}

}  // namespace kgrag
