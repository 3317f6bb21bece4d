#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lnprobe/embstore.hpp"
#include "lnprobe/geometry.hpp"

namespace lnprobe {

enum class RetrievalMode { plain, centered, projected };

std::string_view to_string(RetrievalMode m);
RetrievalMode parse_retrieval_mode(std::string_view s);

struct RetrievalResult {
    std::string query_language;
    std::string candidate_language;
    RetrievalMode mode = RetrievalMode::plain;
    std::vector<std::size_t> predictions;  // one candidate index per query
    double accuracy = 0.0;                 // share of i with predictions[i] == i
};

// Nearest candidate by cosine distance for every query; ties go to the lowest index.
// Gold is positional: query i translates candidate i.
RetrievalResult retrieve(std::span<const SentenceVector> queries,
                         std::span<const SentenceVector> candidates,
                         RetrievalMode mode = RetrievalMode::plain);

struct RetrievalSuiteInput {
    std::map<std::string, std::vector<SentenceVector>> sets;  // positionally parallel
    std::vector<RetrievalMode> modes{RetrievalMode::plain};
    std::map<std::string, LanguageCentroid> centroids;       // required for centered mode
    // Projections into one pivot space, keyed by source language. The pivot
    // language itself needs no entry. Required for projected mode.
    std::map<std::string, LinearProjection> projections;
};

struct RetrievalSuiteResult {
    std::vector<std::string> languages;
    std::vector<RetrievalResult> results;  // per mode, then query, then candidate language
    std::map<RetrievalMode, double> mode_average;

    const RetrievalResult& at(RetrievalMode mode, std::string_view query,
                              std::string_view candidate) const;
};

// Every ordered pair of distinct languages under every requested mode.
RetrievalSuiteResult run_retrieval_suite(const RetrievalSuiteInput& input);

// Accuracy matrix: rows are query languages, columns candidate languages, "-" on the diagonal.
std::string accuracy_matrix_tsv(const RetrievalSuiteResult& result, RetrievalMode mode);
nlohmann::json retrieval_summary(const RetrievalSuiteResult& result);

}  // namespace lnprobe
