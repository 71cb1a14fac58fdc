#include "kgrag/corpus.hpp"
#include "kgrag/csv.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/text.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <set>

using namespace kgrag;

namespace {

using Spo = std::tuple<std::string, std::string, std::string, std::string>;

std::multiset<Spo> as_multiset(const std::vector<Triple>& ts) {
    std::multiset<Spo> out;
    for (const auto& t : ts) out.insert({t.subject, t.predicate, t.object, t.source_chunk_id});
    return out;
}

// Fails for the listed keys, otherwise answers with one fixed triple.
class FlakyLlm : public LlmProvider {
public:
    explicit FlakyLlm(std::set<std::string> down) : down_(std::move(down)) {}
    std::string name() const override { return "flaky"; }
    LlmKind kind() const override { return LlmKind::stub; }
    std::string complete(const LlmRequest& req) override {
        ++calls;
        if (down_.contains(req.key)) throw ProviderError("provider unreachable", 0);
        return "[" + req.key + ", Mentions, Topic]";
    }
    std::atomic<int> calls{0};

private:
    std::set<std::string> down_;
};

Corpus three_chunk_corpus() {
    Corpus corpus({4, 0});
    corpus.ingest_text("doc", "", "one two three four five six seven eight nine ten");
    return corpus;
}

}  // namespace

TEST_CASE("extraction prompt rendering") {
    const Chunk c{"mbs-00000", "mbs", 0, "MBS affected the crisis.", 4};
    const auto prompt = render_extraction_prompt(c);
    CHECK(prompt == std::string(kExtractionInstruction) + ":\n\nMBS affected the crisis.");
    CHECK(prompt.find("MBS affected the crisis.") != std::string::npos);
    CHECK(prompt.find("[Entity1, Relationship, Entity2]") != std::string::npos);

    CHECK(render_extraction_prompt(Chunk{"e-00000", "e", 0, "", 0}) ==
          std::string(kExtractionInstruction) + ":\n\n");

    std::string body;
    for (int i = 0; i < 1000; ++i) body += "w" + std::to_string(i) + " ";
    const auto chunks = chunk_document({"big", "", body}, {});
    REQUIRE(chunks.size() == 1);
    // The instruction line is 13 whitespace tokens.
    CHECK(count_tokens(render_extraction_prompt(chunks[0])) == 13 + 1000);

    const ExtractionPromptTemplate custom("Triples please ({text}) and again {text}");
    CHECK(custom.render("x") == "Triples please (x) and again x");
    CHECK_THROWS_AS(ExtractionPromptTemplate("no slot"), ContractViolation);
}

TEST_CASE("parse_triples examples") {
    auto p = parse_triples("[MBS, affects, Sub-prime crisis]", "c-00000");
    REQUIRE(p.triples.size() == 1);
    CHECK(p.triples[0].subject == "MBS");
    CHECK(p.triples[0].predicate == "affects");
    CHECK(p.triples[0].object == "Sub-prime crisis");
    CHECK(p.triples[0].source_chunk_id == "c-00000");
    CHECK(p.triples[0].status == ReviewStatus::pending);
    CHECK(p.warnings.empty());

    p = parse_triples("Here: [A, r, B]\n1. [ C ,s, D ] noise", "x");
    CHECK(p.triples.size() == 2);
    CHECK(p.triples[1].subject == "C");

    p = parse_triples("[A, r]", "x");
    CHECK(p.triples.empty());
    CHECK(p.warnings.size() == 1);

    p = parse_triples("[A, r, B, C]", "x");
    CHECK(p.triples.empty());
    CHECK(p.warnings.size() == 1);

    p = parse_triples("[ , r, B]", "x");
    CHECK(p.triples.empty());
    CHECK(p.warnings.size() == 1);

    p = parse_triples("[[A, r, B]] [C, s, D]", "x");
    REQUIRE(p.triples.size() == 1);
    CHECK(p.triples[0].subject == "C");
    CHECK(p.warnings.size() == 1);

    p = parse_triples("[A, r, B] [open, never", "x");
    CHECK(p.triples.size() == 1);
    CHECK(p.warnings.size() == 1);

    p = parse_triples("[dangling [A, r, B]", "x");
    CHECK(p.triples.size() == 1);
    CHECK(p.warnings.size() == 1);

    CHECK(parse_triples("", "x").triples.empty());
    CHECK(parse_triples("no brackets at all", "x").warnings.empty());
    CHECK(parse_triples("]]]", "x").triples.empty());
}

TEST_CASE("property: parser is total and its output is well formed") {
    std::mt19937_64 rng(71);
    const std::string alphabet = "[],  abcXYZ\n\t-.";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 80);
    for (int i = 0; i < 10000; ++i) {
        std::string raw;
        const int n = len(rng);
        for (int j = 0; j < n; ++j) raw.push_back(alphabet[pick(rng)]);
        ParsedTriples p;
        REQUIRE_NOTHROW(p = parse_triples(raw, "fuzz"));
        for (const auto& t : p.triples) {
            for (const auto* f : {&t.subject, &t.predicate, &t.object}) {
                CHECK_FALSE(f->empty());
                CHECK(*f == trim(*f));
                CHECK(f->find_first_of("[],") == std::string::npos);
            }
        }
    }
}

TEST_CASE("property: well-formed groups embedded in prose are all recovered") {
    std::mt19937_64 rng(73);
    std::uniform_int_distribution<int> count(0, 8);
    for (int i = 0; i < 500; ++i) {
        std::string raw = testing::random_text(rng, 0, 5);
        std::vector<Triple> want;
        const int n = count(rng);
        for (int j = 0; j < n; ++j) {
            const auto s = testing::random_text(rng, 1, 3);
            const auto p = testing::random_text(rng, 1, 2);
            const auto o = testing::random_text(rng, 1, 3);
            raw += " [ " + s + ",  " + p + " ," + o + "]\n" + testing::random_text(rng, 0, 4);
            want.push_back(make_triple(s, p, o, "k"));
        }
        const auto got = parse_triples(raw, "k");
        CHECK(got.triples == want);
        CHECK(got.warnings.empty());
    }
}

TEST_CASE("canned ten-chunk lecture matches the hand-listed triples") {
    Corpus corpus({30, 0});
    corpus.ingest_file(testing::fixture("extraction10/lecture.txt"));
    REQUIRE(corpus.chunk_count() == 10);
    auto llm = CannedLlm::from_directory(testing::fixture("extraction10/canned"));
    CHECK(llm.size() == 10);
    const auto runs = extract_corpus(corpus, llm);
    REQUIRE(runs.size() == 10);

    std::vector<Triple> all;
    std::size_t warnings = 0;
    for (const auto& r : runs) {
        CHECK(r.ok());
        CHECK(r.run_id == "extract-" + r.chunk_id);
        all.insert(all.end(), r.parsed.begin(), r.parsed.end());
        warnings += r.warnings.size();
    }
    std::multiset<Spo> want;
    const auto rows = csv::parse(read_file(testing::fixture("extraction10/expected_triples.csv")));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        want.insert({f[0], f[1], f[2], f[3]});
    }
    CHECK(want.size() == 14);
    CHECK(as_multiset(all) == want);
    // 2-field group, nested group, empty subject, unclosed bracket
    CHECK(warnings == 4);
}

TEST_CASE("stub provider yields one run per chunk") {
    const auto corpus = three_chunk_corpus();
    StubLlm llm;
    const auto runs = extract_corpus(corpus, llm);
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].chunk_id == "doc-00000");
    CHECK(runs[2].chunk_id == "doc-00002");
    for (const auto& r : runs) {
        CHECK(r.ok());
        CHECK(r.raw_llm_output.starts_with("STUB-ANSWER\n"));
        CHECK(r.parsed.empty());
    }
}

TEST_CASE("a failing chunk is recorded and the rest continue") {
    const auto corpus = three_chunk_corpus();
    FlakyLlm llm({"doc-00001"});
    const auto runs = extract_corpus(corpus, llm);
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].ok());
    CHECK_FALSE(runs[1].ok());
    CHECK(runs[1].error->find("unreachable") != std::string::npos);
    CHECK(runs[2].ok());
    CHECK(runs[2].parsed.size() == 1);

    const auto line = nlohmann::json::parse(runs_to_jsonl(runs).substr(0, runs_to_jsonl(runs).find('\n')));
    CHECK(line["run_id"] == "extract-doc-00000");
    CHECK(line["triples"].size() == 1);
    CHECK(line["error"].is_null());
}

TEST_CASE("too many failed chunks abort the pipeline") {
    const auto corpus = three_chunk_corpus();
    FlakyLlm llm({"doc-00000", "doc-00002"});
    try {
        extract_corpus(corpus, llm);
        FAIL("expected ExtractionFailed");
    } catch (const ExtractionFailed& e) {
        CHECK(e.runs().size() == 3);
        CHECK(std::string(e.what()).find("2 of 3") != std::string::npos);
    }
    CHECK(llm.calls == 3);
}

TEST_CASE("re-running extraction with a replaying provider is idempotent") {
    Corpus corpus({30, 0});
    corpus.ingest_file(testing::fixture("extraction10/lecture.txt"));
    auto llm = CannedLlm::from_directory(testing::fixture("extraction10/canned"));
    ExtractionOptions serial;
    serial.max_in_flight = 1;
    const auto a = extract_corpus(corpus, llm, {}, serial);
    const auto b = extract_corpus(corpus, llm);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].parsed == b[i].parsed);
        CHECK(a[i].raw_llm_output == b[i].raw_llm_output);
    }

    TripleStore store;
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& r : a) store.replace_chunk_triples(r.chunk_id, r.parsed);
    }
    CHECK(store.size() == 14);
}
