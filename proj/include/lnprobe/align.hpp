#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lnprobe/embstore.hpp"
#include "lnprobe/geometry.hpp"

namespace lnprobe {

// Distortion penalty p(d) on |i - j|. p(0) = 0 for every kind.
//   inverse: 1/d      linear: d / max(rows, cols)      none: 0
enum class PenaltyKind { none, inverse, linear };

std::string_view to_string(PenaltyKind k);
PenaltyKind parse_penalty_kind(std::string_view s);

double distortion_penalty(PenaltyKind kind, std::size_t i, std::size_t j, std::size_t rows,
                          std::size_t cols);

struct CostMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> costs;  // row-major
    double distortion_weight = 0.0;
    PenaltyKind penalty_kind = PenaltyKind::none;

    double at(std::size_t i, std::size_t j) const { return costs[i * cols + j]; }
};

// costs[i][j] = cosine_distance(src_i, tgt_j) + weight * p(|i - j|)
CostMatrix build_cost_matrix(std::span<const Vector> src_words, std::span<const Vector> tgt_words,
                             double weight, PenaltyKind kind);

using Link = std::pair<std::size_t, std::size_t>;

struct AlignmentLinkSet {
    std::set<Link> links;

    bool operator==(const AlignmentLinkSet&) const = default;
};

bool is_edge_cover(const AlignmentLinkSet& links, std::size_t rows, std::size_t cols);
double total_cost(const CostMatrix& c, const AlignmentLinkSet& links);

// Exact minimum-weight edge cover of the complete bipartite graph.
//
// Edges with negative cost are always taken. For the rest, with
// delta(v) = cheapest edge at a vertex not yet covered (0 for covered ones),
// the optimum is sum(delta) + the best matching under
// c'(u, v) = c(u, v) - delta(u) - delta(v); that matching comes from a
// rectangular assignment on min(c', 0). Vertices left unmatched take their
// cheapest edge (lowest index on ties).
AlignmentLinkSet min_edge_cover(const CostMatrix& c);

// pool_words on both sides, then build_cost_matrix, then min_edge_cover.
AlignmentLinkSet align_pair(const TokenEmbeddingMatrix& src, const TokenEmbeddingMatrix& tgt,
                            double weight, PenaltyKind kind);

// Pharaoh format: "i-j" links separated by spaces, one sentence pair per line.
// Gold lines may also contain "i?j" for possible-only links.
struct GoldAlignment {
    std::set<Link> sure;
    std::set<Link> possible;  // always contains sure
};

GoldAlignment parse_gold_line(std::string_view line, bool one_based = false);
AlignmentLinkSet parse_links_line(std::string_view line, bool one_based = false);
std::vector<GoldAlignment> read_gold(const std::filesystem::path& path, bool one_based = false);
std::vector<AlignmentLinkSet> read_links(const std::filesystem::path& path, bool one_based = false);
std::string format_links(const AlignmentLinkSet& links);

struct AlignmentScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// precision against possible, recall against sure.
AlignmentScore evaluate_f1(const AlignmentLinkSet& pred, const GoldAlignment& gold);

// Micro-averaged over a corpus (link counts summed before dividing).
AlignmentScore evaluate_corpus(std::span<const AlignmentLinkSet> pred,
                               std::span<const GoldAlignment> gold);

struct DistortionTuning {
    double best_weight = 0.0;
    std::vector<std::pair<double, double>> mean_f1;  // (weight, mean per-pair F1) in grid order
};

// Grid value with the highest mean per-pair F1; ties go to the smaller weight.
DistortionTuning tune_distortion_weight(std::span<const TokenEmbeddingMatrix> src,
                                        std::span<const TokenEmbeddingMatrix> tgt,
                                        std::span<const GoldAlignment> gold,
                                        std::span<const double> grid, PenaltyKind kind);

// Word vectors of one sentence pair.
struct WordVectorPair {
    std::vector<Vector> source;
    std::vector<Vector> target;
};

struct EmAlignment {
    LinearProjection projection;               // refit after the last round
    std::vector<AlignmentLinkSet> alignments;  // from the last round
    std::vector<double> round_mean_cost;       // mean cover cost per pair, per round
    std::vector<std::string> warnings;
};

// Alternates alignment and projection fitting. Round r aligns projected source
// words (round 1 uses the identity) against target words, then refits the
// projection by least squares on the linked word pairs. A failed fit keeps the
// previous projection and records a warning.
EmAlignment em_projection_align(std::span<const WordVectorPair> pairs, std::size_t rounds,
                                double weight = 0.0, PenaltyKind kind = PenaltyKind::none);

}  // namespace lnprobe
