#pragma once

// Reference implementations used only by tests. Each one is written
// independently of the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// Minimum total cost over every edge subset that touches all vertices.
inline double brute_force_cover(const Matrix& c) {
    const std::size_t rows = c.size();
    const std::size_t cols = c.front().size();
    const std::size_t edges = rows * cols;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 1; mask < (std::size_t{1} << edges); ++mask) {
        std::vector<bool> row_hit(rows), col_hit(cols);
        double total = 0.0;
        for (std::size_t e = 0; e < edges; ++e) {
            if (!(mask >> e & 1)) continue;
            row_hit[e / cols] = true;
            col_hit[e % cols] = true;
            total += c[e / cols][e % cols];
        }
        const bool cover = std::all_of(row_hit.begin(), row_hit.end(), [](bool b) { return b; }) &&
                           std::all_of(col_hit.begin(), col_hit.end(), [](bool b) { return b; });
        if (cover) best = std::min(best, total);
    }
    return best;
}

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    return 1.0 - ab / std::sqrt(aa * bb);
}

// Index of the nearest candidate, lowest index on ties.
inline std::vector<std::size_t> nearest(const std::vector<std::vector<double>>& queries,
                                        const std::vector<std::vector<double>>& candidates) {
    std::vector<std::size_t> out;
    for (const auto& q : queries) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            const double d = cosine_distance(q, candidates[j]);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        out.push_back(best);
    }
    return out;
}

// Solves A x = b for every column of b by Gauss-Jordan elimination with partial pivoting.
inline Matrix gauss_jordan(Matrix a, Matrix b) {
    const std::size_t n = a.size();
    const std::size_t m = b.front().size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        const double p = a[col][col];
        for (auto& v : a[col]) v /= p;
        for (auto& v : b[col]) v /= p;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) a[r][k] -= f * a[col][k];
            for (std::size_t k = 0; k < m; ++k) b[r][k] -= f * b[col][k];
        }
    }
    return b;
}

// Least-squares P (tgt_i ~ P src_i) from the normal equations, row by row.
inline Matrix least_squares(const std::vector<std::vector<double>>& src,
                            const std::vector<std::vector<double>>& tgt) {
    const std::size_t d = src.front().size();
    const std::size_t e = tgt.front().size();
    Matrix g(d, std::vector<double>(d, 0.0));
    Matrix h(d, std::vector<double>(e, 0.0));  // X^T Y
    for (std::size_t s = 0; s < src.size(); ++s) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) g[i][j] += src[s][i] * src[s][j];
            for (std::size_t j = 0; j < e; ++j) h[i][j] += src[s][i] * tgt[s][j];
        }
    }
    const Matrix pt = gauss_jordan(g, h);  // d x e = P^T
    Matrix p(e, std::vector<double>(d));
    for (std::size_t i = 0; i < e; ++i) {
        for (std::size_t j = 0; j < d; ++j) p[i][j] = pt[j][i];
    }
    return p;
}

// Homogeneity, completeness and V-measure through mutual information.
struct Vm {
    double h, c, v;
};

inline Vm v_measure(const std::vector<int>& clusters, const std::vector<int>& classes) {
    const double n = static_cast<double>(clusters.size());
    std::map<int, double> nk, nc;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        nk[clusters[i]] += 1.0;
        nc[classes[i]] += 1.0;
        joint[{classes[i], clusters[i]}] += 1.0;
    }
    auto entropy = [n](const std::map<int, double>& counts) {
        double h = 0.0;
        for (const auto& [k, c] : counts) h -= (c / n) * std::log(c / n);
        return h;
    };
    double mi = 0.0;
    for (const auto& [key, c] : joint) mi += (c / n) * std::log(c * n / (nc.at(key.first) * nk.at(key.second)));
    const double hc = entropy(nc);
    const double hk = entropy(nk);
    Vm r{};
    r.h = hc == 0.0 ? 1.0 : mi / hc;
    r.c = hk == 0.0 ? 1.0 : mi / hk;
    r.v = r.h + r.c == 0.0 ? 0.0 : 2.0 * r.h * r.c / (r.h + r.c);
    return r;
}

// Pearson via population covariance over the product of standard deviations.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my) / n;
        vx += (x[i] - mx) * (x[i] - mx) / n;
        vy += (y[i] - my) * (y[i] - my) / n;
    }
    return cov / (std::sqrt(vx) * std::sqrt(vy));
}

// Central difference of f at params[k] with step h; params are restored.
inline double central_difference(const std::function<double()>& f, double& param, double h) {
    const double saved = param;
    param = saved + h;
    const double up = f();
    param = saved - h;
    const double down = f();
    param = saved;
    return (up - down) / (2.0 * h);
}

// Smallest |b1_j + sum_k w1(k, j) x_k| over all samples and hidden units. Central
// differences are only meaningful when no perturbation crosses a ReLU hinge.
template <class W, class B, class X>
double hinge_margin(const W& w1, const B& b1, const std::vector<X>& xs) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& x : xs) {
        for (long j = 0; j < static_cast<long>(b1.size()); ++j) {
            double z = b1(j);
            for (std::size_t k = 0; k < x.size(); ++k) z += w1(static_cast<long>(k), j) * x[k];
            margin = std::min(margin, std::abs(z));
        }
    }
    return margin;
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

}  // namespace oracle
