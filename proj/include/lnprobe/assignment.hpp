#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace lnprobe {

// Rectangular linear sum assignment: picks min(rows, cols) cells, no two in the
// same row or column, minimizing their total cost. `cost` is row-major.
//
// Shortest augmenting path with dual potentials (Hungarian / Jonker-Volgenant
// family), O(n^2 m). Rows and columns are scanned in index order, so the result
// is deterministic. Returned pairs are sorted by row.
std::vector<std::pair<std::size_t, std::size_t>> linear_sum_assignment(std::span<const double> cost,
                                                                       std::size_t rows,
                                                                       std::size_t cols);

}  // namespace lnprobe
