#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lnprobe/embstore.hpp"

namespace lnprobe {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// 1 - cos(a, b). Zero-norm inputs are rejected: they mean a broken embedding upstream.
double cosine_distance(std::span<const double> a, std::span<const double> b);

struct LanguageCentroid {
    std::string language;
    Vector vector;
    std::size_t sample_count = 0;
};

LanguageCentroid centroid(std::span<const SentenceVector> vectors);

// Subtracts the centroid from every vector; order and metadata are kept.
std::vector<SentenceVector> center(std::span<const SentenceVector> set, const LanguageCentroid& c);

// Plain-vector variants, used for word vectors.
Vector mean_vector(std::span<const Vector> vectors);
std::vector<Vector> subtract(std::span<const Vector> vectors, std::span<const double> offset);

// y = matrix * x (+ bias), mapping a source-language space into a target-language one.
struct LinearProjection {
    Eigen::MatrixXd matrix;
    std::optional<Eigen::VectorXd> bias;
    std::string source_language;
    std::string target_language;

    std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
    static LinearProjection identity(std::size_t dim);
};

struct FitOptions {
    bool with_bias = false;
};

struct ProjectionFit {
    LinearProjection projection;
    double residual_mse = 0.0;  // mean over samples and components
    bool regularized = false;   // normal system was rank deficient; Tikhonov term added
};

// Least-squares fit of P (and optionally b) minimizing mean ||P src_i + b - tgt_i||^2.
// Solved through the normal equations; falls back to ridge with
// lambda = 1e-8 * trace(G) / dim(G) when G = X^T X is not safely positive definite.
ProjectionFit fit_projection(std::span<const Vector> src, std::span<const Vector> tgt,
                             const FitOptions& options = {});
ProjectionFit fit_projection(std::span<const SentenceVector> src,
                             std::span<const SentenceVector> tgt, const FitOptions& options = {});

Vector apply_projection(const LinearProjection& p, std::span<const double> v);
std::vector<SentenceVector> apply_projection(const LinearProjection& p,
                                             std::span<const SentenceVector> set);

double projection_mse(const LinearProjection& p, std::span<const Vector> src,
                      std::span<const Vector> tgt);

// A projection is stored as a sentence-vector dump: one record per matrix row
// ("row<i>"), then a "bias" record when present. The sidecar names the languages.
void write_projection(const LinearProjection& p, const std::filesystem::path& path,
                      const nlohmann::json& extra = nlohmann::json::object());
LinearProjection read_projection(const std::filesystem::path& path);

// Centroids are stored one record per language (id = language code); the
// sidecar carries sample counts.
void write_centroids(std::span<const LanguageCentroid> centroids, const std::filesystem::path& path);
std::vector<LanguageCentroid> read_centroids(const std::filesystem::path& path);

}  // namespace lnprobe
