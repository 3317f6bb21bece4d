#include "lnprobe/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "lnprobe/errors.hpp"
#include "lnprobe/random.hpp"

namespace lnprobe {

namespace {

std::vector<std::size_t> dense_ids(std::span<const std::string> labels) {
    std::map<std::string, std::size_t> ids;
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(ids.try_emplace(l, ids.size()).first->second);
    return out;
}

// H(a) and H(a | b) from the joint counts of two label sequences.
struct Entropies {
    double a = 0.0;
    double a_given_b = 0.0;
};

Entropies entropies(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    const double n = static_cast<double>(a.size());
    std::map<std::size_t, double> count_a, count_b;
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        count_a[a[i]] += 1.0;
        count_b[b[i]] += 1.0;
        joint[{a[i], b[i]}] += 1.0;
    }
    Entropies e;
    for (const auto& [label, c] : count_a) e.a -= (c / n) * std::log(c / n);
    for (const auto& [key, c] : joint) e.a_given_b -= (c / n) * std::log(c / count_b.at(key.second));
    return e;
}

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }

    std::vector<std::size_t> parent;
};

}  // namespace

FamilyLabeling read_families(const std::filesystem::path& tsv) {
    std::ifstream in(tsv);
    if (!in) throw IoError(fmt::format("cannot open {}", tsv.string()));
    FamilyLabeling out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw FormatError(fmt::format("{}:{}: expected 'language<TAB>family'", tsv.string(), line_no));
        }
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

std::vector<LanguageCentroid> filter_by_family_size(std::span<const LanguageCentroid> centroids,
                                                    const FamilyLabeling& families,
                                                    std::size_t min_size) {
    std::map<std::string, std::size_t> sizes;
    for (const auto& c : centroids) {
        const auto f = families.find(c.language);
        if (f == families.end()) throw ValidationError(fmt::format("no family for language '{}'", c.language));
        ++sizes[f->second];
    }
    std::vector<LanguageCentroid> out;
    for (const auto& c : centroids) {
        if (sizes[families.at(c.language)] >= min_size) out.push_back(c);
    }
    return out;
}

std::vector<std::size_t> agglomerate(std::span<const LanguageCentroid> centroids, std::size_t k) {
    const std::size_t n = centroids.size();
    if (k < 1 || k > n) {
        throw ValidationError(fmt::format("agglomerate: k = {} outside [1, {}]", k, n));
    }
    std::set<std::string> seen;
    for (const auto& c : centroids) {
        if (!seen.insert(c.language).second) {
            throw ValidationError(fmt::format("agglomerate: duplicate language '{}'", c.language));
        }
    }

    // Single linkage merges in minimum-spanning-tree edge order.
    using Edge = std::tuple<double, std::string, std::string, std::size_t, std::size_t>;
    std::vector<Edge> edges;
    edges.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = cosine_distance(centroids[i].vector, centroids[j].vector);
            const auto& a = centroids[i].language;
            const auto& b = centroids[j].language;
            edges.emplace_back(d, std::min(a, b), std::max(a, b), i, j);
        }
    }
    std::sort(edges.begin(), edges.end());

    DisjointSets sets(n);
    std::size_t clusters = n;
    for (const auto& [d, a, b, i, j] : edges) {
        if (clusters == k) break;
        const auto ri = sets.find(i);
        const auto rj = sets.find(j);
        if (ri == rj) continue;
        sets.parent[std::max(ri, rj)] = std::min(ri, rj);
        --clusters;
    }

    std::map<std::size_t, std::size_t> id_of_root;
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = id_of_root.try_emplace(sets.find(i), id_of_root.size()).first->second;
    }
    return labels;
}

ClusterScore v_measure(std::span<const std::size_t> clusters, std::span<const std::size_t> classes) {
    if (clusters.empty()) throw ValidationError("v_measure: empty input");
    if (clusters.size() != classes.size()) {
        throw ValidationError(fmt::format("v_measure: {} cluster labels for {} items", clusters.size(),
                                          classes.size()));
    }
    const auto gold = entropies(classes, clusters);
    const auto pred = entropies(clusters, classes);
    ClusterScore s;
    s.homogeneity = gold.a == 0.0 ? 1.0 : 1.0 - gold.a_given_b / gold.a;
    s.completeness = pred.a == 0.0 ? 1.0 : 1.0 - pred.a_given_b / pred.a;
    const double hc = s.homogeneity + s.completeness;
    s.v_measure = hc > 0.0 ? 2.0 * s.homogeneity * s.completeness / hc : 0.0;
    return s;
}

ClusterScore v_measure(std::span<const std::size_t> clusters, std::span<const std::string> classes) {
    const auto ids = dense_ids(classes);
    return v_measure(clusters, ids);
}

ClusterScore v_measure(std::span<const std::size_t> clusters,
                       std::span<const LanguageCentroid> centroids, const FamilyLabeling& families) {
    std::vector<std::string> gold;
    for (const auto& c : centroids) {
        const auto f = families.find(c.language);
        if (f == families.end()) throw ValidationError(fmt::format("no family for language '{}'", c.language));
        gold.push_back(f->second);
    }
    return v_measure(clusters, gold);
}

ClusterScore random_baseline(std::span<const std::string> classes, std::size_t k, std::size_t runs,
                             std::uint64_t seed) {
    if (k < 1 || runs < 1) throw ConfigError("random_baseline: k and runs must be positive");
    ClusterScore mean;
    std::vector<std::size_t> labels(classes.size());
    for (std::size_t r = 0; r < runs; ++r) {
        Rng rng(seed + r);
        for (auto& l : labels) l = static_cast<std::size_t>(rng.below(k));
        const auto s = v_measure(labels, classes);
        mean.homogeneity += s.homogeneity;
        mean.completeness += s.completeness;
        mean.v_measure += s.v_measure;
    }
    const double n = static_cast<double>(runs);
    mean.homogeneity /= n;
    mean.completeness /= n;
    mean.v_measure /= n;
    return mean;
}

std::vector<std::pair<double, double>> project_2d(std::span<const LanguageCentroid> centroids) {
    if (centroids.size() < 2) throw ValidationError("project_2d: need at least two centroids");
    const auto n = static_cast<Eigen::Index>(centroids.size());
    const auto d = static_cast<Eigen::Index>(centroids.front().vector.size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = centroids[static_cast<std::size_t>(i)].vector;
        if (static_cast<Eigen::Index>(v.size()) != d) throw ValidationError("project_2d: mixed dimensions");
        for (Eigen::Index k = 0; k < d; ++k) x(i, k) = v[static_cast<std::size_t>(k)];
    }
    x.rowwise() -= x.colwise().mean();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, 2);
    const Eigen::Index available = std::min<Eigen::Index>(2, svd.singularValues().size());
    for (Eigen::Index c = 0; c < available; ++c) {
        const double sigma = svd.singularValues()(c);
        if (sigma <= 0.0) continue;
        const auto loading = svd.matrixV().col(c);
        Eigen::Index pivot = 0;
        for (Eigen::Index k = 1; k < loading.size(); ++k) {
            if (std::abs(loading(k)) > std::abs(loading(pivot))) pivot = k;
        }
        const double sign = loading(pivot) < 0.0 ? -1.0 : 1.0;
        coords.col(c) = sign * sigma * svd.matrixU().col(c);
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(centroids.size());
    for (Eigen::Index i = 0; i < n; ++i) out.emplace_back(coords(i, 0), coords(i, 1));
    return out;
}

}  // namespace lnprobe
