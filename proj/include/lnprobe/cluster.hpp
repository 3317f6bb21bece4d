#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lnprobe/geometry.hpp"

namespace lnprobe {

struct ClusterScore {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
};

// language code -> family name
using FamilyLabeling = std::map<std::string, std::string>;

FamilyLabeling read_families(const std::filesystem::path& tsv);

// Keeps centroids whose family has at least `min_size` members among the given centroids.
std::vector<LanguageCentroid> filter_by_family_size(std::span<const LanguageCentroid> centroids,
                                                    const FamilyLabeling& families,
                                                    std::size_t min_size);

// Single-linkage agglomerative clustering under cosine distance, stopped at k
// clusters. Equal distances merge the pair with the lexicographically smallest
// language codes first. Cluster ids are numbered by first appearance.
std::vector<std::size_t> agglomerate(std::span<const LanguageCentroid> centroids, std::size_t k);

// Homogeneity / completeness / V-measure with natural-log entropies.
// `clusters` and `classes` are parallel label sequences of any comparable type.
ClusterScore v_measure(std::span<const std::size_t> clusters, std::span<const std::size_t> classes);
ClusterScore v_measure(std::span<const std::size_t> clusters, std::span<const std::string> classes);
ClusterScore v_measure(std::span<const std::size_t> clusters,
                       std::span<const LanguageCentroid> centroids, const FamilyLabeling& families);

// Uniformly random assignment into k clusters, averaged over `runs` seeds
// (seed, seed + 1, ...).
ClusterScore random_baseline(std::span<const std::string> classes, std::size_t k, std::size_t runs,
                             std::uint64_t seed);

// Top-two principal-component coordinates of the centered centroid matrix.
// Each component's largest-magnitude loading is made positive.
std::vector<std::pair<double, double>> project_2d(std::span<const LanguageCentroid> centroids);

}  // namespace lnprobe
