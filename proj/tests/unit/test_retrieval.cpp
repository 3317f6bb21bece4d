#include <doctest.h>

#include <Eigen/QR>

#include "lnprobe/errors.hpp"
#include "lnprobe/random.hpp"
#include "lnprobe/retrieval.hpp"
#include "lnprobe/synth.hpp"
#include "oracles.hpp"

using namespace lnprobe;

namespace {

std::vector<SentenceVector> random_set(Rng& rng, std::size_t n, std::size_t dim, const std::string& lang) {
    std::vector<SentenceVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        Vector v(dim);
        for (auto& x : v) x = rng.normal();
        out.push_back({lang + std::to_string(i), lang, Pooling::mean, v});
    }
    return out;
}

std::vector<Vector> vectors(const std::vector<SentenceVector>& set) {
    std::vector<Vector> out;
    for (const auto& s : set) out.push_back(s.vector);
    return out;
}

}  // namespace

TEST_CASE("self retrieval is perfect") {
    Rng rng(1);
    const auto q = random_set(rng, 30, 8, "en");
    const auto r = retrieve(q, q);
    CHECK(r.accuracy == 1.0);
    CHECK(r.predictions.size() == 30);
}

TEST_CASE("reversed orthogonal candidates score zero") {
    std::vector<SentenceVector> q, c;
    for (std::size_t i = 0; i < 4; ++i) {
        Vector e(4, 0.0);
        e[i] = 1.0;
        q.push_back({"q", "en", Pooling::mean, e});
    }
    c.assign(q.rbegin(), q.rend());
    const auto r = retrieve(q, c);
    CHECK(r.accuracy == 0.0);
    CHECK(r.predictions == std::vector<std::size_t>{3, 2, 1, 0});
}

TEST_CASE("ties go to the lowest candidate index") {
    std::vector<SentenceVector> q{{"q", "en", Pooling::mean, {1, 0}}};
    std::vector<SentenceVector> c{{"a", "de", Pooling::mean, {0, 1}},
                                  {"b", "de", Pooling::mean, {2, 0}},
                                  {"c", "de", Pooling::mean, {5, 0}}};
    CHECK(retrieve(q, c).predictions == std::vector<std::size_t>{1});
}

TEST_CASE("predictions match a double-loop nearest-neighbour oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const auto q = random_set(rng, 50, 16, "en");
        auto c = q;
        for (auto& s : c) {
            for (auto& x : s.vector) x += 0.8 * rng.normal();
        }
        const auto r = retrieve(q, c);
        CHECK(r.predictions == oracle::nearest(vectors(q), vectors(c)));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < 50; ++i) hits += r.predictions[i] == i;
        CHECK(r.accuracy == static_cast<double>(hits) / 50.0);
    }
}

TEST_CASE("predictions are invariant under candidate scaling and a shared rotation") {
    Rng rng(3);
    const std::size_t dim = 6;
    const auto q = random_set(rng, 40, dim, "en");
    auto c = q;
    for (auto& s : c) {
        for (auto& x : s.vector) x += rng.normal();
    }
    const auto base = retrieve(q, c).predictions;

    auto scaled = c;
    for (auto& s : scaled) {
        for (auto& x : s.vector) x *= 3.7;
    }
    CHECK(retrieve(q, scaled).predictions == base);

    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
    const Eigen::MatrixXd rot = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
    auto rotate = [&](std::vector<SentenceVector> set) {
        for (auto& s : set) {
            const Eigen::VectorXd y = rot * Eigen::Map<const Eigen::VectorXd>(s.vector.data(), dim);
            s.vector.assign(y.data(), y.data() + dim);
        }
        return set;
    };
    CHECK(retrieve(rotate(q), rotate(c)).predictions == base);
}

TEST_CASE("input errors") {
    Rng rng(4);
    const auto q = random_set(rng, 3, 4, "en");
    const auto c = random_set(rng, 3, 5, "de");
    CHECK_THROWS_AS(retrieve(q, c), ValidationError);
    auto z = random_set(rng, 3, 4, "de");
    z[1].vector.assign(4, 0.0);
    CHECK_THROWS_AS(retrieve(q, z), ValidationError);
}

TEST_CASE("suite composition, centering and projection") {
    AdditiveModelConfig cfg;
    cfg.languages = {"de", "en", "fr"};
    cfg.sentences = 200;
    const auto pooled = pooled_sentences(generate_additive(cfg));

    RetrievalSuiteInput in;
    in.sets = pooled;
    in.modes = {RetrievalMode::plain, RetrievalMode::centered, RetrievalMode::projected};
    CHECK_THROWS_AS(run_retrieval_suite(in), ConfigError);

    for (const auto& [lang, set] : pooled) in.centroids[lang] = centroid(set);
    for (const auto& lang : {"de", "fr"}) {
        in.projections[lang] = fit_projection(pooled.at(lang), pooled.at("en")).projection;
    }
    const auto res = run_retrieval_suite(in);
    CHECK(res.languages == std::vector<std::string>{"de", "en", "fr"});
    CHECK(res.results.size() == 3 * 6);

    const auto& single = res.at(RetrievalMode::plain, "de", "fr");
    CHECK(single.predictions == retrieve(pooled.at("de"), pooled.at("fr")).predictions);
    CHECK(res.mode_average.at(RetrievalMode::centered) >= res.mode_average.at(RetrievalMode::plain));
    CHECK(res.mode_average.at(RetrievalMode::projected) == 1.0);

    const auto tsv = accuracy_matrix_tsv(res, RetrievalMode::centered);
    CHECK(tsv.find("# mode=centered") == 0);
    CHECK(tsv.find("\t-") != std::string::npos);
    const auto js = retrieval_summary(res);
    CHECK(js.contains("mode_average"));
}

TEST_CASE("centering both sides keeps self retrieval perfect") {
    Rng rng(5);
    const auto q = random_set(rng, 25, 6, "sv");
    const auto centered = center(q, centroid(q));
    CHECK(retrieve(centered, centered).accuracy == 1.0);
}

TEST_CASE("projected mode on exactly linear spaces") {
    Rng rng(6);
    const std::size_t dim = 10;
    const auto src = random_set(rng, 60, dim, "cs");
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
    auto tgt = src;
    for (auto& s : tgt) {
        const Eigen::VectorXd y = a * Eigen::Map<const Eigen::VectorXd>(s.vector.data(), dim);
        s.vector.assign(y.data(), y.data() + dim);
        s.language = "en";
    }
    RetrievalSuiteInput in;
    in.sets = {{"cs", src}, {"en", tgt}};
    in.modes = {RetrievalMode::projected};
    in.projections["cs"] = fit_projection(src, tgt).projection;
    const auto res = run_retrieval_suite(in);
    CHECK(res.at(RetrievalMode::projected, "cs", "en").accuracy == 1.0);
    CHECK(res.at(RetrievalMode::projected, "en", "cs").accuracy == 1.0);
}
