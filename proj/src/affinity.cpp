#include "embedopt/affinity.hpp"

#include "embedopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace embedopt {

AffinityGraph::AffinityGraph(Matrix weights, bool normalized) : weights_(std::move(weights)), normalized_(normalized) {
    if (weights_.rows() != weights_.cols()) throw DimensionMismatch("affinity matrix must be square");
    const Eigen::Index n = weights_.rows();
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (weights_(j, j) != 0.0) throw Error("affinity graph must have a zero diagonal");
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = weights_(i, j);
            if (!std::isfinite(w) || w < 0.0) throw Error("affinity weights must be finite and nonnegative");
            if (w != weights_(j, i)) throw Error("affinity weights must be symmetric");
            total += w;
        }
    }
    if (normalized_ && std::abs(total - 1.0) > 1e-10) {
        throw Error("normalized affinity graph sums to " + std::to_string(total));
    }
}

std::size_t AffinityGraph::edge_count() const {
    return static_cast<std::size_t>((weights_.array() != 0.0).count());
}

SymMatrix pairwise_sqdist(const DataMatrix& y) {
    const Eigen::Index n = y.cols();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = m + 1; k < n; ++k) {
            const double v = (y.col(m) - y.col(k)).squaredNorm();
            d(m, k) = v;
            d(k, m) = v;
        }
    }
    return SymMatrix(std::move(d));
}

namespace {

struct EntropyEval {
    double entropy_bits;
    Vector p;
};

// Conditionals for bandwidth sigma2, shifted by the nearest distance so the
// largest exponent is zero.
EntropyEval evaluate_entropy(std::span<const double> row, std::size_t self, double min_dist, double sigma2) {
    EntropyEval out{0.0, Vector::Zero(static_cast<Eigen::Index>(row.size()))};
    double sum = 0.0;
    for (std::size_t m = 0; m < row.size(); ++m) {
        if (m == self) continue;
        const double v = std::exp(-(row[m] - min_dist) / (2.0 * sigma2));
        out.p(static_cast<Eigen::Index>(m)) = v;
        sum += v;
    }
    out.p /= sum;
    double h = 0.0;
    for (Eigen::Index m = 0; m < out.p.size(); ++m) {
        const double v = out.p(m);
        if (v > 0.0) h -= v * std::log(v);
    }
    out.entropy_bits = h / std::log(2.0);
    return out;
}

} // namespace

PerplexityCalibration calibrate_perplexity(std::span<const double> row, std::size_t self, double perplexity) {
    if (self >= row.size()) throw DimensionMismatch("calibrate_perplexity: self index out of range");
    if (row.size() < 3) throw CalibrationFailed("calibrate_perplexity: need at least two neighbors");
    if (!(perplexity > 1.0)) throw CalibrationFailed("calibrate_perplexity: perplexity must exceed 1");

    double min_dist = std::numeric_limits<double>::infinity();
    double max_dist = 0.0;
    double mean = 0.0;
    for (std::size_t m = 0; m < row.size(); ++m) {
        if (m == self) continue;
        if (!std::isfinite(row[m]) || row[m] < 0.0) throw CalibrationFailed("calibrate_perplexity: bad distance");
        min_dist = std::min(min_dist, row[m]);
        max_dist = std::max(max_dist, row[m]);
        mean += row[m];
    }
    const double neighbors = static_cast<double>(row.size() - 1);
    mean /= neighbors;

    PerplexityCalibration out;
    if (max_dist == min_dist) {
        // Every bandwidth gives the uniform distribution.
        out.sigma2 = mean > 0.0 ? mean : 1.0;
        out.conditionals = Vector::Constant(static_cast<Eigen::Index>(row.size()), 1.0 / neighbors);
        out.conditionals(static_cast<Eigen::Index>(self)) = 0.0;
        out.perplexity = neighbors;
        return out;
    }

    const double target = std::log2(perplexity);
    auto entropy = [&](double s2) { return evaluate_entropy(row, self, min_dist, s2).entropy_bits; };

    constexpr int kMaxBracketSteps = 1000;
    double lo = mean;
    double hi = mean;
    int steps = 0;
    if (entropy(mean) < target) {
        while (entropy(hi) < target) {
            lo = hi;
            hi *= 2.0;
            if (++steps > kMaxBracketSteps || !std::isfinite(hi)) {
                throw CalibrationFailed("calibrate_perplexity: cannot reach perplexity " + std::to_string(perplexity));
            }
        }
    } else {
        while (entropy(lo) > target) {
            hi = lo;
            lo *= 0.5;
            if (++steps > kMaxBracketSteps || !(lo > 0.0)) {
                throw CalibrationFailed("calibrate_perplexity: cannot reach perplexity " + std::to_string(perplexity));
            }
        }
    }

    for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (entropy(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    out.sigma2 = 0.5 * (lo + hi);
    EntropyEval final_eval = evaluate_entropy(row, self, min_dist, out.sigma2);
    out.perplexity = std::exp2(final_eval.entropy_bits);
    out.conditionals = std::move(final_eval.p);
    if (std::abs(out.perplexity - perplexity) > 1e-4 * perplexity) {
        throw CalibrationFailed("calibrate_perplexity: converged to perplexity " + std::to_string(out.perplexity));
    }
    return out;
}

Matrix calibrate_conditionals(const SymMatrix& sqdist, double perplexity) {
    const Matrix d = sqdist.to_dense();
    const Eigen::Index n = d.rows();
    Matrix out(n, n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = d(i, j);
        out.row(i) = calibrate_perplexity(row, static_cast<std::size_t>(i), perplexity).conditionals.transpose();
    }
    return out;
}

AffinityGraph symmetrize_affinities(const Matrix& conditionals) {
    if (conditionals.rows() != conditionals.cols()) throw DimensionMismatch("conditionals must be square");
    const Eigen::Index n = conditionals.rows();
    Matrix p = (conditionals + conditionals.transpose()) / (2.0 * static_cast<double>(n));
    p.diagonal().setZero();
    // Force exact symmetry after rounding.
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) p(j, i) = p(i, j);
    }
    return AffinityGraph(std::move(p), true);
}

AffinityGraph sne_affinities(const DataMatrix& y, double perplexity) {
    return symmetrize_affinities(calibrate_conditionals(pairwise_sqdist(y), perplexity));
}

AffinityGraph complete_graph(std::size_t n) {
    const auto size = static_cast<Eigen::Index>(n);
    Matrix w = Matrix::Ones(size, size);
    w.diagonal().setZero();
    return AffinityGraph(std::move(w), false);
}

AffinityGraph knn_sparsify(const AffinityGraph& w, std::size_t kappa) {
    const std::size_t n = w.order();
    if (kappa > n) throw Error("knn_sparsify: kappa exceeds the number of points");
    if (n == 0 || kappa + 1 >= n) return w;

    const auto size = static_cast<Eigen::Index>(n);
    Matrix out = Matrix::Zero(size, size);
    if (kappa == 0) return AffinityGraph(std::move(out), false);

    const Matrix& weights = w.weights();
    std::vector<Eigen::Index> order(n - 1);
    for (Eigen::Index i = 0; i < size; ++i) {
        std::size_t k = 0;
        for (Eigen::Index j = 0; j < size; ++j) {
            if (j != i) order[k++] = j;
        }
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kappa), order.end(),
                          [&](Eigen::Index a, Eigen::Index b) {
                              if (weights(i, a) != weights(i, b)) return weights(i, a) > weights(i, b);
                              return a < b;
                          });
        for (std::size_t k2 = 0; k2 < kappa; ++k2) {
            const Eigen::Index j = order[k2];
            out(i, j) = weights(i, j);
            out(j, i) = weights(j, i);
        }
    }
    return AffinityGraph(std::move(out), false);
}

GraphLaplacian graph_laplacian(const Matrix& w) {
    if (w.rows() != w.cols()) throw DimensionMismatch("graph_laplacian: weights must be square");
    const Eigen::Index n = w.rows();
    Matrix l = -w;
    l.diagonal().setZero();
    Vector degrees = -l.rowwise().sum();
    l.diagonal() = degrees;

    GraphLaplacian out;
    out.degrees = std::move(degrees);
    const double nnz = static_cast<double>((l.array() != 0.0).count());
    if (n > 0 && nnz / (static_cast<double>(n) * static_cast<double>(n)) <= kDenseFallbackDensity) {
        out.matrix = SymMatrix(SparseMatrix(l.sparseView(0.0, 0.0)));
    } else {
        out.matrix = SymMatrix(std::move(l));
    }
    return out;
}

GraphLaplacian graph_laplacian(const AffinityGraph& w) { return graph_laplacian(w.weights()); }

} // namespace embedopt
