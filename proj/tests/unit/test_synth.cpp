#include <doctest.h>

#include <cmath>

#include "lnprobe/errors.hpp"
#include "lnprobe/geometry.hpp"
#include "lnprobe/synth.hpp"

using namespace lnprobe;

TEST_CASE("zero noise and zero offsets give identical languages") {
    AdditiveModelConfig cfg;
    cfg.languages = {"de", "en", "fr"};
    cfg.sentences = 30;
    cfg.tokens = 3;
    cfg.offset_scale = 0.0;
    cfg.noise = 0.0;
    const auto corpus = generate_additive(cfg);
    const auto& en = corpus.dumps.at("en").tokens();
    for (const auto& lang : {"de", "fr"}) {
        const auto& other = corpus.dumps.at(lang).tokens();
        REQUIRE(other.size() == en.size());
        for (std::size_t i = 0; i < en.size(); ++i) CHECK(other[i].values == en[i].values);
    }
}

TEST_CASE("fixed seed is reproducible and a new seed is not") {
    AdditiveModelConfig cfg;
    cfg.sentences = 20;
    const auto a = generate_additive(cfg);
    const auto b = generate_additive(cfg);
    CHECK(a.dumps == b.dumps);
    cfg.seed = 1;
    CHECK(generate_additive(cfg).dumps != a.dumps);
}

TEST_CASE("records carry ids, languages and identity word spans") {
    AdditiveModelConfig cfg;
    cfg.languages = {"en", "cs"};
    cfg.sentences = 3;
    cfg.tokens = 4;
    cfg.dim = 5;
    const auto corpus = generate_additive(cfg);
    const auto& m = corpus.dumps.at("cs").tokens()[2];
    CHECK(m.sentence_id == "cs-000002");
    CHECK(m.language == "cs");
    CHECK(m.n_tokens() == 4);
    CHECK(m.word_spans.size() == 4);
    CHECK(m.word_spans[3] == WordSpan{3, 4});
    CHECK_FALSE(m.leading_special);
}

TEST_CASE("row equals meaning plus offset up to noise") {
    AdditiveModelConfig cfg;
    cfg.sentences = 10;
    cfg.tokens = 2;
    cfg.noise = 0.0;
    const auto corpus = generate_additive(cfg);
    const auto& m = corpus.dumps.at("ru").tokens()[4];
    const auto& off = corpus.offsets.at("ru");
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t k = 0; k < cfg.dim; ++k) {
            const double expect = corpus.meanings[4][t][k] + off[k];
            CHECK(std::abs(m.values[t * cfg.dim + k] - expect) < 1e-5);
        }
    }
}

TEST_CASE("language centroid approaches the offset") {
    AdditiveModelConfig cfg;  // offset scale 3, noise 0.1, dim 32
    const auto corpus = generate_additive(cfg);
    const auto pooled = pooled_sentences(corpus);
    const double n = static_cast<double>(cfg.sentences);
    const double sigma = std::sqrt(1.0 + cfg.noise * cfg.noise);
    for (const auto& [lang, set] : pooled) {
        const auto c = centroid(set);
        const auto& off = corpus.offsets.at(lang);
        std::size_t outside = 0;
        for (std::size_t k = 0; k < cfg.dim; ++k) outside += std::abs(c.vector[k] - off[k]) > 3.0 * sigma / std::sqrt(n);
        // 3-sigma bound per component; allow the odd tail hit among 32.
        CHECK(outside <= 2);
        CHECK(norm(off) > 3.0 * std::sqrt(static_cast<double>(cfg.dim)) * 0.5);
    }
}

TEST_CASE("invalid configurations") {
    AdditiveModelConfig cfg;
    cfg.languages = {"en"};
    CHECK_THROWS_AS(generate_additive(cfg), ConfigError);
    cfg.languages = {"en", "en"};
    CHECK_THROWS_AS(generate_additive(cfg), ConfigError);
    cfg = {};
    cfg.dim = 1;
    CHECK_THROWS_AS(generate_additive(cfg), ConfigError);
    cfg = {};
    cfg.noise = -0.1;
    CHECK_THROWS_AS(generate_additive(cfg), ConfigError);
    cfg = {};
    cfg.tokens = 0;
    CHECK_THROWS_AS(generate_additive(cfg), ConfigError);
}
