#include "lnprobe/geometry.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "lnprobe/errors.hpp"

namespace lnprobe {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ValidationError(fmt::format("{}: dimension mismatch ({} vs {})", what, a, b));
}

Eigen::MatrixXd stack_rows(std::span<const Vector> rows, std::size_t dim, bool ones_column) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd m(n, d + (ones_column ? 1 : 0));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        require_same_dim(r.size(), dim, "projection data");
        for (Eigen::Index k = 0; k < d; ++k) m(i, k) = r[static_cast<std::size_t>(k)];
        if (ones_column) m(i, d) = 1.0;
    }
    return m;
}

std::vector<Vector> vectors_of(std::span<const SentenceVector> set) {
    std::vector<Vector> out;
    out.reserve(set.size());
    for (const auto& s : set) out.push_back(s.vector);
    return out;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "cosine_distance");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine_distance: zero-norm vector");
    return 1.0 - dot(a, b) / (na * nb);
}

Vector mean_vector(std::span<const Vector> vectors) {
    if (vectors.empty()) throw ValidationError("mean of an empty vector list");
    Vector acc(vectors.front().size(), 0.0);
    for (const auto& v : vectors) {
        require_same_dim(v.size(), acc.size(), "mean_vector");
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
    }
    for (auto& x : acc) x /= static_cast<double>(vectors.size());
    return acc;
}

std::vector<Vector> subtract(std::span<const Vector> vectors, std::span<const double> offset) {
    std::vector<Vector> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
        require_same_dim(v.size(), offset.size(), "subtract");
        Vector r(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) r[k] = v[k] - offset[k];
        out.push_back(std::move(r));
    }
    return out;
}

LanguageCentroid centroid(std::span<const SentenceVector> vectors) {
    if (vectors.empty()) throw ValidationError("centroid of an empty set");
    const auto& language = vectors.front().language;
    const std::size_t dim = vectors.front().vector.size();
    Vector acc(dim, 0.0);
    for (const auto& v : vectors) {
        if (v.language != language) {
            throw ValidationError(fmt::format("centroid: record {} is '{}', expected '{}'",
                                              v.sentence_id, v.language, language));
        }
        require_same_dim(v.vector.size(), dim, "centroid");
        for (std::size_t k = 0; k < dim; ++k) acc[k] += v.vector[k];
    }
    for (auto& x : acc) x /= static_cast<double>(vectors.size());
    return {language, std::move(acc), vectors.size()};
}

std::vector<SentenceVector> center(std::span<const SentenceVector> set, const LanguageCentroid& c) {
    std::vector<SentenceVector> out;
    out.reserve(set.size());
    for (const auto& s : set) {
        require_same_dim(s.vector.size(), c.vector.size(), "center");
        SentenceVector r = s;
        for (std::size_t k = 0; k < r.vector.size(); ++k) r.vector[k] -= c.vector[k];
        out.push_back(std::move(r));
    }
    return out;
}

LinearProjection LinearProjection::identity(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return {Eigen::MatrixXd::Identity(d, d), std::nullopt, {}, {}};
}

ProjectionFit fit_projection(std::span<const Vector> src, std::span<const Vector> tgt,
                             const FitOptions& options) {
    if (src.size() != tgt.size()) {
        throw ValidationError(
            fmt::format("fit_projection: {} source vs {} target samples", src.size(), tgt.size()));
    }
    if (src.empty()) throw ValidationError("fit_projection: no samples");
    const std::size_t src_dim = src.front().size();
    const std::size_t tgt_dim = tgt.front().size();
    const Eigen::MatrixXd x = stack_rows(src, src_dim, options.with_bias);
    const Eigen::MatrixXd y = stack_rows(tgt, tgt_dim, false);

    Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::MatrixXd rhs = x.transpose() * y;

    ProjectionFit fit;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
        const double trace = gram.trace();
        if (!(trace > 0.0) || !std::isfinite(trace)) {
            throw NumericError("fit_projection: source vectors are all zero");
        }
        const double lambda = 1e-8 * trace / static_cast<double>(gram.rows());
        gram.diagonal().array() += lambda;
        llt.compute(gram);
        if (llt.info() != Eigen::Success) throw NumericError("fit_projection: regularized solve failed");
        fit.regularized = true;
    }
    // Solution W satisfies X W ~ Y, so the projection matrix is W^T.
    const Eigen::MatrixXd w = llt.solve(rhs);
    if (!w.allFinite()) throw NumericError("fit_projection: non-finite solution");

    const auto d = static_cast<Eigen::Index>(src_dim);
    fit.projection.matrix = w.topRows(d).transpose();
    if (options.with_bias) fit.projection.bias = w.row(d).transpose();
    fit.projection.source_language.clear();
    fit.projection.target_language.clear();
    fit.residual_mse = (x * w - y).squaredNorm() / static_cast<double>(y.size());
    return fit;
}

ProjectionFit fit_projection(std::span<const SentenceVector> src,
                             std::span<const SentenceVector> tgt, const FitOptions& options) {
    const auto s = vectors_of(src);
    const auto t = vectors_of(tgt);
    auto fit = fit_projection(s, t, options);
    if (!src.empty()) fit.projection.source_language = src.front().language;
    if (!tgt.empty()) fit.projection.target_language = tgt.front().language;
    return fit;
}

Vector apply_projection(const LinearProjection& p, std::span<const double> v) {
    require_same_dim(v.size(), static_cast<std::size_t>(p.matrix.cols()), "apply_projection");
    const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
    Eigen::VectorXd y = p.matrix * x;
    if (p.bias) y += *p.bias;
    return Vector(y.data(), y.data() + y.size());
}

std::vector<SentenceVector> apply_projection(const LinearProjection& p,
                                             std::span<const SentenceVector> set) {
    std::vector<SentenceVector> out;
    out.reserve(set.size());
    for (const auto& s : set) {
        SentenceVector r = s;
        r.vector = apply_projection(p, s.vector);
        out.push_back(std::move(r));
    }
    return out;
}

double projection_mse(const LinearProjection& p, std::span<const Vector> src,
                      std::span<const Vector> tgt) {
    if (src.size() != tgt.size() || src.empty()) {
        throw ValidationError("projection_mse: sample counts differ or are zero");
    }
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto y = apply_projection(p, src[i]);
        require_same_dim(y.size(), tgt[i].size(), "projection_mse");
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double e = y[k] - tgt[i][k];
            total += e * e;
        }
        count += y.size();
    }
    return total / static_cast<double>(count);
}

void write_projection(const LinearProjection& p, const std::filesystem::path& path,
                      const nlohmann::json& extra) {
    std::vector<SentenceVector> rows;
    for (Eigen::Index r = 0; r < p.matrix.rows(); ++r) {
        const Eigen::VectorXd row = p.matrix.row(r).transpose();
        rows.push_back({fmt::format("row{}", r), p.target_language, Pooling::mean,
                        Vector(row.data(), row.data() + row.size())});
    }
    if (p.bias) {
        if (p.matrix.cols() != p.matrix.rows()) {
            throw ValidationError("write_projection: bias needs a square matrix in the container");
        }
        rows.push_back({"bias", p.target_language, Pooling::mean,
                        Vector(p.bias->data(), p.bias->data() + p.bias->size())});
    }
    const auto set = make_sentence_set(std::move(rows), static_cast<std::size_t>(p.matrix.cols()));
    write_dump(set, path);
    nlohmann::json meta = extra;
    meta["type"] = "projection";
    meta["model_id"] = "";
    meta["layer"] = 0;
    meta["source_language"] = p.source_language;
    meta["target_language"] = p.target_language;
    meta["rows"] = p.matrix.rows();
    meta["cols"] = p.matrix.cols();
    meta["bias"] = p.bias.has_value();
    write_sidecar(path, meta);
}

LinearProjection read_projection(const std::filesystem::path& path) {
    const auto set = read_dump(path);
    const auto meta = read_sidecar(path);
    if (meta.value("type", std::string{}) != "projection") {
        throw FormatError(fmt::format("{}: sidecar does not describe a projection", path.string()));
    }
    const auto& records = set.sentences();
    const bool has_bias = meta.value("bias", false);
    const auto rows = meta.value("rows", records.size() - (has_bias ? 1 : 0));
    if (records.size() != rows + (has_bias ? 1 : 0)) {
        throw CorruptionError(fmt::format("{}: {} records for a {}-row projection", path.string(),
                                          records.size(), rows));
    }
    LinearProjection p;
    p.source_language = meta.value("source_language", std::string{});
    p.target_language = meta.value("target_language", std::string{});
    p.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(set.dim));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < set.dim; ++c) {
            p.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = records[r].vector[c];
        }
    }
    if (has_bias) {
        const auto& b = records.back().vector;
        p.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    }
    return p;
}

void write_centroids(std::span<const LanguageCentroid> centroids, const std::filesystem::path& path) {
    if (centroids.empty()) throw ValidationError("no centroids to write");
    std::vector<SentenceVector> rows;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& c : centroids) {
        rows.push_back({c.language, c.language, Pooling::mean, c.vector});
        counts[c.language] = c.sample_count;
    }
    const auto dim = centroids.front().vector.size();
    write_dump(make_sentence_set(std::move(rows), dim), path);
    write_sidecar(path, {{"type", "centroids"}, {"model_id", ""}, {"layer", 0}, {"sample_counts", counts}});
}

std::vector<LanguageCentroid> read_centroids(const std::filesystem::path& path) {
    const auto set = load_set(path);
    const auto meta = read_sidecar(path);
    const auto counts = meta.value("sample_counts", nlohmann::json::object());
    std::vector<LanguageCentroid> out;
    for (const auto& r : set.sentences()) {
        out.push_back({r.language, r.vector, counts.value(r.language, std::size_t{1})});
    }
    return out;
}

}  // namespace lnprobe
