#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lnprobe/embstore.hpp"

namespace lnprobe {

// Synthetic multi-parallel corpus following the additive hypothesis:
// every token row is  word meaning + language offset + noise.
//
// Word meanings are shared across languages (position t of sentence i has the
// same meaning in every language), offsets are offset_scale * N(0, I) drawn once
// per language, noise is noise * N(0, I) drawn per language and token.
struct AdditiveModelConfig {
    std::vector<std::string> languages{"cs", "de", "en", "es", "fr", "ru"};
    std::size_t sentences = 500;
    std::size_t dim = 32;
    std::size_t tokens = 1;  // word rows per sentence
    double offset_scale = 3.0;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    AdditiveModelConfig config;
    std::map<std::string, Vector> offsets;
    std::vector<std::vector<Vector>> meanings;  // [sentence][token]
    std::map<std::string, EmbeddingSet> dumps;  // token matrices, identity word spans
};

// Throws ConfigError for fewer than two languages, dim < 2, or negative scales.
SyntheticCorpus generate_additive(const AdditiveModelConfig& config);

// Mean-pooled sentence vectors per language, in corpus order.
std::map<std::string, std::vector<SentenceVector>> pooled_sentences(const SyntheticCorpus& corpus);

}  // namespace lnprobe
