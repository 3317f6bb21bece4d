#include "lnprobe/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lnprobe/errors.hpp"

namespace lnprobe {

namespace {

// n <= m. Returns, for each row, its column. Potentials u (rows) and v (cols)
// are kept 1-based with a virtual column 0 as the augmenting root.
std::vector<std::size_t> solve_wide(std::span<const double> cost, std::size_t n, std::size_t m) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
    std::vector<double> slack(m + 1);
    std::vector<char> used(m + 1);

    for (std::size_t row = 1; row <= n; ++row) {
        owner[0] = row;
        std::size_t col0 = 0;
        std::fill(slack.begin(), slack.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[col0] = 1;
            const std::size_t i0 = owner[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < slack[j]) {
                    slack[j] = cur;
                    way[j] = col0;
                }
                if (slack[j] < delta) {
                    delta = slack[j];
                    col1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    slack[j] -= delta;
                }
            }
            col0 = col1;
        } while (owner[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
        } while (col0 != 0);
    }

    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= m; ++j) {
        if (owner[j] != 0) row_to_col[owner[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> linear_sum_assignment(std::span<const double> cost,
                                                                       std::size_t rows,
                                                                       std::size_t cols) {
    if (cost.size() != rows * cols) throw ValidationError("assignment: cost size does not match shape");
    for (double c : cost) {
        if (!std::isfinite(c)) throw ValidationError("assignment: non-finite cost");
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (rows == 0 || cols == 0) return out;
    if (rows <= cols) {
        const auto match = solve_wide(cost, rows, cols);
        for (std::size_t i = 0; i < rows; ++i) out.emplace_back(i, match[i]);
        return out;
    }
    std::vector<double> transposed(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) transposed[j * rows + i] = cost[i * cols + j];
    }
    const auto match = solve_wide(transposed, cols, rows);
    for (std::size_t j = 0; j < cols; ++j) out.emplace_back(match[j], j);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace lnprobe
