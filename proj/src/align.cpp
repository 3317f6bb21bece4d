#include "lnprobe/align.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "lnprobe/assignment.hpp"
#include "lnprobe/errors.hpp"

namespace lnprobe {

std::string_view to_string(PenaltyKind k) {
    switch (k) {
        case PenaltyKind::none: return "none";
        case PenaltyKind::inverse: return "inverse";
        case PenaltyKind::linear: return "linear";
    }
    return "?";
}

PenaltyKind parse_penalty_kind(std::string_view s) {
    if (s == "none") return PenaltyKind::none;
    if (s == "inverse") return PenaltyKind::inverse;
    if (s == "linear") return PenaltyKind::linear;
    throw ConfigError(fmt::format("unknown penalty kind '{}'", s));
}

double distortion_penalty(PenaltyKind kind, std::size_t i, std::size_t j, std::size_t rows,
                          std::size_t cols) {
    const std::size_t d = i > j ? i - j : j - i;
    if (d == 0) return 0.0;
    switch (kind) {
        case PenaltyKind::none: return 0.0;
        case PenaltyKind::inverse: return 1.0 / static_cast<double>(d);
        case PenaltyKind::linear:
            return static_cast<double>(d) / static_cast<double>(std::max(rows, cols));
    }
    return 0.0;
}

CostMatrix build_cost_matrix(std::span<const Vector> src_words, std::span<const Vector> tgt_words,
                             double weight, PenaltyKind kind) {
    if (src_words.empty() || tgt_words.empty()) {
        throw ValidationError("build_cost_matrix: both sentences need at least one word");
    }
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw ValidationError("build_cost_matrix: distortion weight must be finite and non-negative");
    }
    CostMatrix c;
    c.rows = src_words.size();
    c.cols = tgt_words.size();
    c.distortion_weight = weight;
    c.penalty_kind = kind;
    c.costs.resize(c.rows * c.cols);
    for (std::size_t i = 0; i < c.rows; ++i) {
        for (std::size_t j = 0; j < c.cols; ++j) {
            double cost;
            try {
                cost = cosine_distance(src_words[i], tgt_words[j]);
            } catch (const ValidationError& e) {
                throw ValidationError(fmt::format("word pair ({}, {}): {}", i, j, e.what()));
            }
            c.costs[i * c.cols + j] = cost + weight * distortion_penalty(kind, i, j, c.rows, c.cols);
        }
    }
    return c;
}

bool is_edge_cover(const AlignmentLinkSet& links, std::size_t rows, std::size_t cols) {
    std::vector<char> row_hit(rows, 0), col_hit(cols, 0);
    for (const auto& [i, j] : links.links) {
        if (i >= rows || j >= cols) return false;
        row_hit[i] = 1;
        col_hit[j] = 1;
    }
    return std::all_of(row_hit.begin(), row_hit.end(), [](char h) { return h != 0; }) &&
           std::all_of(col_hit.begin(), col_hit.end(), [](char h) { return h != 0; });
}

double total_cost(const CostMatrix& c, const AlignmentLinkSet& links) {
    double sum = 0.0;
    for (const auto& [i, j] : links.links) sum += c.at(i, j);
    return sum;
}

AlignmentLinkSet min_edge_cover(const CostMatrix& c) {
    if (c.rows == 0 || c.cols == 0) throw ValidationError("min_edge_cover: empty side");
    if (c.costs.size() != c.rows * c.cols) throw ValidationError("min_edge_cover: malformed matrix");
    for (std::size_t k = 0; k < c.costs.size(); ++k) {
        if (!std::isfinite(c.costs[k])) {
            throw ValidationError(
                fmt::format("min_edge_cover: non-finite cost at ({}, {})", k / c.cols, k % c.cols));
        }
    }
    const std::size_t rows = c.rows;
    const std::size_t cols = c.cols;

    AlignmentLinkSet out;
    std::vector<char> row_done(rows, 0), col_done(cols, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (c.at(i, j) < 0.0) {
                out.links.emplace(i, j);
                row_done[i] = col_done[j] = 1;
            }
        }
    }

    auto positive = [&](std::size_t i, std::size_t j) { return std::max(c.at(i, j), 0.0); };
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> row_delta(rows, 0.0), col_delta(cols, 0.0);
    std::vector<std::size_t> row_best(rows, 0), col_best(cols, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        double best = inf;
        for (std::size_t j = 0; j < cols; ++j) {
            if (positive(i, j) < best) {
                best = positive(i, j);
                row_best[i] = j;
            }
        }
        if (!row_done[i]) row_delta[i] = best;
    }
    for (std::size_t j = 0; j < cols; ++j) {
        double best = inf;
        for (std::size_t i = 0; i < rows; ++i) {
            if (positive(i, j) < best) {
                best = positive(i, j);
                col_best[j] = i;
            }
        }
        if (!col_done[j]) col_delta[j] = best;
    }

    std::vector<double> reduced(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            reduced[i * cols + j] = std::min(positive(i, j) - row_delta[i] - col_delta[j], 0.0);
        }
    }
    for (const auto& [i, j] : linear_sum_assignment(reduced, rows, cols)) {
        if (reduced[i * cols + j] < 0.0) {
            out.links.emplace(i, j);
            row_done[i] = col_done[j] = 1;
        }
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (!row_done[i]) out.links.emplace(i, row_best[i]);
    }
    for (std::size_t j = 0; j < cols; ++j) {
        if (!col_done[j]) out.links.emplace(col_best[j], j);
    }
#ifndef NDEBUG
    if (!is_edge_cover(out, rows, cols)) throw std::logic_error("min_edge_cover produced a non-cover");
#endif
    return out;
}

AlignmentLinkSet align_pair(const TokenEmbeddingMatrix& src, const TokenEmbeddingMatrix& tgt,
                            double weight, PenaltyKind kind) {
    const auto s = pool_words(src);
    const auto t = pool_words(tgt);
    try {
        return min_edge_cover(build_cost_matrix(s, t, weight, kind));
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("pair {} / {}: {}", src.sentence_id, tgt.sentence_id, e.what()));
    }
}

namespace {

std::size_t parse_index(std::string_view s, bool one_based, std::string_view token) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw FormatError(fmt::format("bad alignment link '{}'", token));
    }
    if (one_based) {
        if (v == 0) throw FormatError(fmt::format("link '{}' has index 0 in a 1-based file", token));
        --v;
    }
    return v;
}

template <typename Fn>
void for_each_token(std::string_view line, Fn&& fn) {
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        std::size_t end = pos;
        while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
        if (end > pos) fn(line.substr(pos, end - pos));
        pos = end;
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace

GoldAlignment parse_gold_line(std::string_view line, bool one_based) {
    GoldAlignment g;
    for_each_token(line, [&](std::string_view tok) {
        const auto sep = tok.find_first_of("-?");
        if (sep == std::string_view::npos) throw FormatError(fmt::format("bad alignment link '{}'", tok));
        const Link link{parse_index(tok.substr(0, sep), one_based, tok),
                        parse_index(tok.substr(sep + 1), one_based, tok)};
        if (tok[sep] == '-') g.sure.insert(link);
        g.possible.insert(link);
    });
    return g;
}

AlignmentLinkSet parse_links_line(std::string_view line, bool one_based) {
    AlignmentLinkSet out;
    for_each_token(line, [&](std::string_view tok) {
        const auto sep = tok.find('-');
        if (sep == std::string_view::npos) throw FormatError(fmt::format("bad alignment link '{}'", tok));
        out.links.emplace(parse_index(tok.substr(0, sep), one_based, tok),
                          parse_index(tok.substr(sep + 1), one_based, tok));
    });
    return out;
}

std::vector<GoldAlignment> read_gold(const std::filesystem::path& path, bool one_based) {
    std::vector<GoldAlignment> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(parse_gold_line(lines[i], one_based));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), i + 1, e.what()));
        }
    }
    return out;
}

std::vector<AlignmentLinkSet> read_links(const std::filesystem::path& path, bool one_based) {
    std::vector<AlignmentLinkSet> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(parse_links_line(lines[i], one_based));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), i + 1, e.what()));
        }
    }
    return out;
}

std::string format_links(const AlignmentLinkSet& links) {
    std::string out;
    for (const auto& [i, j] : links.links) {
        if (!out.empty()) out += ' ';
        out += fmt::format("{}-{}", i, j);
    }
    return out;
}

namespace {

struct LinkCounts {
    std::size_t predicted = 0;
    std::size_t hit_possible = 0;
    std::size_t hit_sure = 0;
    std::size_t sure = 0;
};

LinkCounts count_links(const AlignmentLinkSet& pred, const GoldAlignment& gold) {
    LinkCounts n;
    n.predicted = pred.links.size();
    n.sure = gold.sure.size();
    for (const auto& l : pred.links) {
        if (gold.possible.contains(l) || gold.sure.contains(l)) ++n.hit_possible;
        if (gold.sure.contains(l)) ++n.hit_sure;
    }
    return n;
}

AlignmentScore score_of(const LinkCounts& n) {
    AlignmentScore s;
    s.precision = n.predicted == 0 ? 0.0
                                   : static_cast<double>(n.hit_possible) / static_cast<double>(n.predicted);
    s.recall = static_cast<double>(n.hit_sure) / static_cast<double>(n.sure);
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

}  // namespace

AlignmentScore evaluate_f1(const AlignmentLinkSet& pred, const GoldAlignment& gold) {
    if (gold.sure.empty()) throw ValidationError("evaluate_f1: gold alignment has no sure links");
    return score_of(count_links(pred, gold));
}

AlignmentScore evaluate_corpus(std::span<const AlignmentLinkSet> pred,
                               std::span<const GoldAlignment> gold) {
    if (pred.size() != gold.size()) {
        throw ValidationError(
            fmt::format("{} predicted alignments for {} gold alignments", pred.size(), gold.size()));
    }
    LinkCounts total;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto n = count_links(pred[i], gold[i]);
        total.predicted += n.predicted;
        total.hit_possible += n.hit_possible;
        total.hit_sure += n.hit_sure;
        total.sure += n.sure;
    }
    if (total.sure == 0) throw ValidationError("evaluate_corpus: gold has no sure links");
    return score_of(total);
}

DistortionTuning tune_distortion_weight(std::span<const TokenEmbeddingMatrix> src,
                                        std::span<const TokenEmbeddingMatrix> tgt,
                                        std::span<const GoldAlignment> gold,
                                        std::span<const double> grid, PenaltyKind kind) {
    if (grid.empty()) throw ConfigError("tune_distortion_weight: empty grid");
    for (double w : grid) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ConfigError(fmt::format("tune_distortion_weight: invalid grid value {}", w));
        }
    }
    if (src.empty()) throw ValidationError("tune_distortion_weight: empty development set");
    if (src.size() != tgt.size() || src.size() != gold.size()) {
        throw ValidationError("tune_distortion_weight: source, target and gold sizes differ");
    }
    std::vector<std::vector<Vector>> src_words, tgt_words;
    for (std::size_t p = 0; p < src.size(); ++p) {
        src_words.push_back(pool_words(src[p]));
        tgt_words.push_back(pool_words(tgt[p]));
    }

    DistortionTuning out;
    double best_f1 = -1.0;
    for (double w : grid) {
        double sum = 0.0;
        for (std::size_t p = 0; p < src.size(); ++p) {
            const auto links = min_edge_cover(build_cost_matrix(src_words[p], tgt_words[p], w, kind));
            sum += evaluate_f1(links, gold[p]).f1;
        }
        const double mean = sum / static_cast<double>(src.size());
        out.mean_f1.emplace_back(w, mean);
        if (mean > best_f1 || (mean == best_f1 && w < out.best_weight)) {
            best_f1 = mean;
            out.best_weight = w;
        }
    }
    return out;
}

EmAlignment em_projection_align(std::span<const WordVectorPair> pairs, std::size_t rounds,
                                double weight, PenaltyKind kind) {
    if (rounds < 1) throw ConfigError("em_projection_align: rounds must be >= 1");
    if (pairs.empty()) throw ValidationError("em_projection_align: no sentence pairs");
    const std::size_t dim = pairs.front().source.empty() ? 0 : pairs.front().source.front().size();
    if (dim == 0) throw ValidationError("em_projection_align: empty source sentence");

    EmAlignment out;
    out.projection = LinearProjection::identity(dim);
    for (std::size_t round = 1; round <= rounds; ++round) {
        out.alignments.clear();
        std::vector<Vector> fit_src, fit_tgt;
        double cost_sum = 0.0;
        for (const auto& pair : pairs) {
            std::vector<Vector> projected;
            projected.reserve(pair.source.size());
            for (const auto& v : pair.source) projected.push_back(apply_projection(out.projection, v));
            const auto costs = build_cost_matrix(projected, pair.target, weight, kind);
            auto links = min_edge_cover(costs);
            cost_sum += total_cost(costs, links);
            for (const auto& [i, j] : links.links) {
                fit_src.push_back(pair.source[i]);
                fit_tgt.push_back(pair.target[j]);
            }
            out.alignments.push_back(std::move(links));
        }
        out.round_mean_cost.push_back(cost_sum / static_cast<double>(pairs.size()));
        try {
            auto fit = fit_projection(fit_src, fit_tgt);
            for (const auto& pair : pairs) {
                for (const auto& v : pair.source) {
                    if (norm(apply_projection(fit.projection, v)) == 0.0) {
                        throw NumericError("projection maps a source word to zero");
                    }
                }
            }
            out.projection = std::move(fit.projection);
        } catch (const NumericError& e) {
            out.warnings.push_back(
                fmt::format("round {}: projection fit failed ({}); keeping previous projection", round, e.what()));
        }
    }
    return out;
}

}  // namespace lnprobe
