#include "lnprobe/synth.hpp"

#include <set>

#include <fmt/format.h>

#include "lnprobe/errors.hpp"
#include "lnprobe/random.hpp"

namespace lnprobe {

SyntheticCorpus generate_additive(const AdditiveModelConfig& config) {
    const std::set<std::string> distinct(config.languages.begin(), config.languages.end());
    if (config.languages.size() < 2 || distinct.size() != config.languages.size()) {
        throw ConfigError("synthetic corpus needs at least two distinct languages");
    }
    if (config.dim < 2) throw ConfigError("synthetic corpus needs dim >= 2");
    if (config.tokens < 1) throw ConfigError("synthetic corpus needs at least one token per sentence");
    if (!(config.offset_scale >= 0.0) || !(config.noise >= 0.0)) {
        throw ConfigError("offset scale and noise must be non-negative");
    }

    Rng rng(config.seed);
    SyntheticCorpus corpus;
    corpus.config = config;
    for (const auto& lang : config.languages) {
        Vector o(config.dim);
        for (auto& x : o) x = config.offset_scale * rng.normal();
        corpus.offsets[lang] = std::move(o);
    }
    corpus.meanings.resize(config.sentences);
    for (auto& sentence : corpus.meanings) {
        sentence.resize(config.tokens);
        for (auto& word : sentence) {
            word.resize(config.dim);
            for (auto& x : word) x = rng.normal();
        }
    }
    for (const auto& lang : config.languages) {
        const auto& offset = corpus.offsets[lang];
        std::vector<TokenEmbeddingMatrix> records;
        records.reserve(config.sentences);
        for (std::size_t i = 0; i < config.sentences; ++i) {
            TokenEmbeddingMatrix m;
            m.sentence_id = fmt::format("{}-{:06d}", lang, i);
            m.language = lang;
            m.dim = config.dim;
            m.values.reserve(config.tokens * config.dim);
            for (std::size_t t = 0; t < config.tokens; ++t) {
                const auto& word = corpus.meanings[i][t];
                for (std::size_t k = 0; k < config.dim; ++k) {
                    const double v = word[k] + offset[k] + config.noise * rng.normal();
                    m.values.push_back(static_cast<float>(v));
                }
                const auto t32 = static_cast<std::uint32_t>(t);
                m.word_spans.push_back({t32, t32 + 1});
            }
            records.push_back(std::move(m));
        }
        corpus.dumps[lang] = make_token_set(std::move(records), config.dim, "synthetic-additive", 0);
    }
    return corpus;
}

std::map<std::string, std::vector<SentenceVector>> pooled_sentences(const SyntheticCorpus& corpus) {
    std::map<std::string, std::vector<SentenceVector>> out;
    for (const auto& [lang, set] : corpus.dumps) {
        auto& pooled = out[lang];
        for (const auto& m : set.tokens()) pooled.push_back(pool_mean(m));
    }
    return out;
}

}  // namespace lnprobe
