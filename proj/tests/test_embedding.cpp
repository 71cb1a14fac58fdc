#include "kgrag/embedding.hpp"
#include "kgrag/errors.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

using namespace kgrag;

TEST_CASE("fnv1a_64 reference values") {
    CHECK(fnv1a_64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a_64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a_64("bond") == 0xcd2be69bc6ac4a7cULL);
}

TEST_CASE("local hash embedding places signed features") {
    // Buckets and signs computed with a separate python FNV-1a script.
    const auto v = local_hash_embed("bond yield");
    REQUIRE(v.dim() == 256);
    const double h = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < 256; ++i) {
        if (i == 124) CHECK(v.values[i] == doctest::Approx(-h).epsilon(1e-12));
        else if (i == 238) CHECK(v.values[i] == doctest::Approx(h).epsilon(1e-12));
        else CHECK(v.values[i] == 0.0);
    }
    const auto u = local_hash_embed("caf\xc3\xa9");
    CHECK(u.values[137] == 1.0);
}

TEST_CASE("local hash embedding basics") {
    LocalHashEmbedder emb;
    CHECK(emb.dim() == 256);
    CHECK(emb.kind() == ProviderKind::local_deterministic);
    CHECK(emb.embed("Mortgage-backed securities") == emb.embed("Mortgage-backed securities"));
    CHECK(emb.embed("BOND Yield") == emb.embed("bond yield"));
    CHECK(emb.embed("yield, bond!") == emb.embed("bond yield"));

    const auto zero = emb.embed("");
    CHECK(zero.dim() == 256);
    CHECK(zero.norm() == 0.0);
    CHECK(emb.embed(" ... \n").norm() == 0.0);

    std::mt19937_64 rng(3);
    const auto big = emb.embed(testing::random_text(rng, 1000, 1000));
    CHECK(big.norm() == doctest::Approx(1.0).epsilon(1e-9));

    CHECK(LocalHashEmbedder(16).embed("x y z").dim() == 16);
    CHECK_THROWS_AS(LocalHashEmbedder(0), ContractViolation);
}

TEST_CASE("property: nonempty embeddings are unit length and deterministic") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const auto text = testing::random_text(rng, 1, 60);
        const auto v = local_hash_embed(text);
        CHECK(std::abs(v.norm() - 1.0) <= 1e-9);
        CHECK(v == local_hash_embed(text));
    }
}

TEST_CASE("cosine similarity examples") {
    const EmbeddingVector x{{1, 0}};
    const EmbeddingVector y{{0, 1}};
    const EmbeddingVector d{{1, 1}};
    CHECK(cosine_similarity(x, x) == doctest::Approx(1.0));
    CHECK(cosine_similarity(x, y) == 0.0);
    CHECK(cosine_similarity(x, d) == doctest::Approx(0.70710678).epsilon(1e-8));
    CHECK(cosine_similarity(x, EmbeddingVector{{-2, 0}}) == doctest::Approx(-1.0));
    CHECK(cosine_similarity(x, EmbeddingVector{{0, 0}}) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(x, EmbeddingVector{{1, 0, 0}}), ContractViolation);
}

TEST_CASE("property: cosine matches the oracle, is symmetric and bounded") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    std::uniform_int_distribution<int> dim(1, 64);
    for (int i = 0; i < 1000; ++i) {
        const int n = dim(rng);
        EmbeddingVector a, b;
        for (int j = 0; j < n; ++j) {
            a.values.push_back(val(rng));
            b.values.push_back(i % 7 == 0 ? a.values.back() * 3.0 : val(rng));
        }
        const double ab = cosine_similarity(a, b);
        CHECK(ab == cosine_similarity(b, a));
        CHECK(std::abs(ab) <= 1.0);
        CHECK(ab == doctest::Approx(testing::oracle_cosine(a.values, b.values)).epsilon(1e-12));
        if (i % 7 == 0) CHECK(ab == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("top_k examples") {
    const std::vector<double> s{0.2, 0.9, 0.5, 0.9, 0.1};
    CHECK(top_k_indices(s, 3) == std::vector<std::size_t>{1, 3, 2});
    CHECK(top_k_indices(s, 10) == std::vector<std::size_t>{1, 3, 2, 0, 4});
    CHECK(top_k_indices(s, 0).empty());
    CHECK(top_k_indices(std::vector<double>{}, 5).empty());
}

TEST_CASE("property: top_k agrees with a stable full sort") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> len(0, 60);
    std::uniform_int_distribution<int> coarse(0, 9);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> scores(static_cast<std::size_t>(len(rng)));
        for (double& v : scores) v = coarse(rng) / 10.0;  // plenty of ties
        const std::size_t k = static_cast<std::size_t>(coarse(rng));
        CHECK(top_k_indices(scores, k) == testing::oracle_top_k(scores, k));
    }
}

TEST_CASE("remote embedder speaks the JSON contract") {
    auto transport = std::make_shared<testing::FakeTransport>();
    transport->push(200, R"({"embedding":[0.5,0.5,0.0]})");
    transport->push(200, R"({"data":[{"embedding":[1,2,3]}]})");
    transport->push(200, R"({"embedding":[1,2]})");
    transport->push(503, "busy");
    transport->push(200, "not json");

    RemoteEmbedder emb({"http://embed.local/v1", "emb-model", "secret", 0, 2}, transport);
    CHECK(emb.kind() == ProviderKind::remote);
    CHECK(emb.dim() == 0);
    CHECK(emb.embed("hello").values == std::vector<double>{0.5, 0.5, 0.0});
    CHECK(emb.dim() == 3);
    CHECK(emb.embed("again").dim() == 3);
    CHECK_THROWS_AS(emb.embed("wrong dim"), ProviderError);
    try {
        emb.embed("busy");
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.status() == 503);
    }
    CHECK_THROWS_AS(emb.embed("garbage"), ProviderError);
    CHECK_THROWS_AS(emb.embed("nothing scripted"), ProviderError);

    const auto calls = transport->calls();
    REQUIRE(calls.size() == 6);
    CHECK(calls[0].url == "http://embed.local/v1");
    CHECK(calls[0].headers.at("Authorization") == "Bearer secret");
    const auto body = nlohmann::json::parse(calls[0].body);
    CHECK(body["model"] == "emb-model");
    CHECK(body["input"] == "hello");

    CHECK_THROWS_AS(RemoteEmbedder({"", "m", "", 0, 1}, transport), ConfigurationError);
}
