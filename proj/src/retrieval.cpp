#include "lnprobe/retrieval.hpp"

#include <fmt/format.h>

#include "lnprobe/errors.hpp"

namespace lnprobe {

namespace {

std::vector<double> norms_of(std::span<const SentenceVector> set, std::size_t dim, const char* side) {
    std::vector<double> norms;
    norms.reserve(set.size());
    for (const auto& s : set) {
        if (s.vector.size() != dim) {
            throw ValidationError(fmt::format("retrieve: {} record {} has dim {}, expected {}", side,
                                              s.sentence_id, s.vector.size(), dim));
        }
        const double n = norm(s.vector);
        if (n == 0.0) {
            throw ValidationError(fmt::format("retrieve: {} record {} has zero norm", side, s.sentence_id));
        }
        norms.push_back(n);
    }
    return norms;
}

}  // namespace

std::string_view to_string(RetrievalMode m) {
    switch (m) {
        case RetrievalMode::plain: return "plain";
        case RetrievalMode::centered: return "centered";
        case RetrievalMode::projected: return "projected";
    }
    return "?";
}

RetrievalMode parse_retrieval_mode(std::string_view s) {
    if (s == "plain") return RetrievalMode::plain;
    if (s == "centered") return RetrievalMode::centered;
    if (s == "projected") return RetrievalMode::projected;
    throw ConfigError(fmt::format("unknown retrieval mode '{}'", s));
}

RetrievalResult retrieve(std::span<const SentenceVector> queries,
                         std::span<const SentenceVector> candidates, RetrievalMode mode) {
    if (queries.empty() || candidates.empty()) {
        throw ValidationError("retrieve: queries and candidates must be non-empty");
    }
    const std::size_t dim = queries.front().vector.size();
    const auto qn = norms_of(queries, dim, "query");
    const auto cn = norms_of(candidates, dim, "candidate");

    RetrievalResult result;
    result.query_language = queries.front().language;
    result.candidate_language = candidates.front().language;
    result.mode = mode;
    result.predictions.resize(queries.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        std::size_t best = 0;
        double best_distance = 0.0;
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            const double d = 1.0 - dot(queries[i].vector, candidates[j].vector) / (qn[i] * cn[j]);
            if (j == 0 || d < best_distance) {
                best = j;
                best_distance = d;
            }
        }
        result.predictions[i] = best;
        if (best == i) ++hits;
    }
    result.accuracy = static_cast<double>(hits) / static_cast<double>(queries.size());
    return result;
}

const RetrievalResult& RetrievalSuiteResult::at(RetrievalMode mode, std::string_view query,
                                                std::string_view candidate) const {
    for (const auto& r : results) {
        if (r.mode == mode && r.query_language == query && r.candidate_language == candidate) return r;
    }
    throw ValidationError(fmt::format("no {} result for {} -> {}", to_string(mode), query, candidate));
}

RetrievalSuiteResult run_retrieval_suite(const RetrievalSuiteInput& input) {
    if (input.sets.size() < 2) throw ConfigError("retrieval suite needs at least two languages");
    std::size_t n = input.sets.begin()->second.size();
    for (const auto& [lang, set] : input.sets) {
        if (set.size() != n) {
            throw ValidationError(fmt::format("retrieval suite: {} has {} sentences, expected {}", lang,
                                              set.size(), n));
        }
    }

    // Resolve every prerequisite before doing any work.
    std::string pivot;
    for (auto mode : input.modes) {
        if (mode == RetrievalMode::centered) {
            for (const auto& [lang, set] : input.sets) {
                if (!input.centroids.contains(lang)) {
                    throw ConfigError(fmt::format("centered mode: no centroid for '{}'", lang));
                }
            }
        }
        if (mode == RetrievalMode::projected) {
            if (input.projections.empty()) throw ConfigError("projected mode: no projections given");
            pivot = input.projections.begin()->second.target_language;
            for (const auto& [lang, p] : input.projections) {
                if (p.target_language != pivot) {
                    throw ConfigError(fmt::format("projected mode: projections target both '{}' and '{}'",
                                                  pivot, p.target_language));
                }
            }
            for (const auto& [lang, set] : input.sets) {
                if (lang != pivot && !input.projections.contains(lang)) {
                    throw ConfigError(fmt::format("projected mode: no projection {} -> {}", lang, pivot));
                }
            }
        }
    }

    RetrievalSuiteResult out;
    for (const auto& [lang, set] : input.sets) out.languages.push_back(lang);
    for (auto mode : input.modes) {
        std::map<std::string, std::vector<SentenceVector>> transformed;
        for (const auto& [lang, set] : input.sets) {
            switch (mode) {
                case RetrievalMode::plain: transformed[lang] = set; break;
                case RetrievalMode::centered:
                    transformed[lang] = center(set, input.centroids.at(lang));
                    break;
                case RetrievalMode::projected:
                    transformed[lang] = lang == pivot && !input.projections.contains(lang)
                                            ? set
                                            : apply_projection(input.projections.at(lang), set);
                    break;
            }
        }
        double total = 0.0;
        std::size_t pairs = 0;
        for (const auto& q : out.languages) {
            for (const auto& c : out.languages) {
                if (q == c) continue;
                auto r = retrieve(transformed[q], transformed[c], mode);
                r.query_language = q;
                r.candidate_language = c;
                total += r.accuracy;
                ++pairs;
                out.results.push_back(std::move(r));
            }
        }
        out.mode_average[mode] = total / static_cast<double>(pairs);
    }
    return out;
}

std::string accuracy_matrix_tsv(const RetrievalSuiteResult& result, RetrievalMode mode) {
    std::string out = fmt::format("# mode={}\nquery", to_string(mode));
    for (const auto& c : result.languages) out += "\t" + c;
    out += '\n';
    for (const auto& q : result.languages) {
        out += q;
        for (const auto& c : result.languages) {
            out += q == c ? std::string("\t-") : fmt::format("\t{:.3f}", result.at(mode, q, c).accuracy);
        }
        out += '\n';
    }
    return out;
}

nlohmann::json retrieval_summary(const RetrievalSuiteResult& result) {
    nlohmann::json j;
    j["languages"] = result.languages;
    nlohmann::json averages = nlohmann::json::object();
    for (const auto& [mode, avg] : result.mode_average) averages[std::string(to_string(mode))] = avg;
    j["mode_average"] = averages;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& r : result.results) {
        pairs.push_back({{"mode", to_string(r.mode)},
                         {"query", r.query_language},
                         {"candidate", r.candidate_language},
                         {"accuracy", r.accuracy}});
    }
    j["pairs"] = pairs;
    return j;
}

}  // namespace lnprobe
