#ifndef EMBEDOPT_AFFINITY_HPP
#define EMBEDOPT_AFFINITY_HPP

#include "embedopt/linalg.hpp"

#include <cstddef>
#include <span>

namespace embedopt {

/// High-dimensional input: one column per point (D x N).
using DataMatrix = Matrix;

/**
 * Symmetric nonnegative weights with zero diagonal.
 *
 * A normalized graph sums to one over all ordered pairs (the SNE
 * probabilities P).  Weights are kept dense; sparsified graphs simply carry
 * explicit zeros.
 */
class AffinityGraph {
public:
    AffinityGraph() = default;

    /// Validates symmetry, nonnegativity, zero diagonal and (if flagged) unit sum.
    AffinityGraph(Matrix weights, bool normalized);

    std::size_t order() const { return static_cast<std::size_t>(weights_.rows()); }
    const Matrix& weights() const { return weights_; }
    bool normalized() const { return normalized_; }
    double operator()(std::size_t n, std::size_t m) const {
        return weights_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    }

    /// Off-diagonal entries that are nonzero, counted over ordered pairs.
    std::size_t edge_count() const;

private:
    Matrix weights_;
    bool normalized_ = false;
};

struct GraphLaplacian {
    SymMatrix matrix;   // L = D - W
    Vector degrees;     // d_n = sum_m w_nm

    std::size_t order() const { return matrix.order(); }
};

/// Squared Euclidean distances between the columns of y.
SymMatrix pairwise_sqdist(const DataMatrix& y);

struct PerplexityCalibration {
    double sigma2 = 0.0;
    Vector conditionals;   // p_{m|n}; zero at the self index
    double perplexity = 0.0;
};

/**
 * Finds the Gaussian bandwidth sigma^2 of one point so that the perplexity
 * 2^H of its conditional neighbor distribution equals `perplexity`.
 *
 * `sqdist_row` holds squared distances to every point, including the point
 * itself at index `self`.  Rows whose off-diagonal distances are all equal
 * get uniform conditionals.  Throws CalibrationFailed when the target cannot
 * be bracketed within 1000 doublings/halvings or is missed by more than
 * 1e-4 relative.
 */
PerplexityCalibration calibrate_perplexity(std::span<const double> sqdist_row, std::size_t self,
                                           double perplexity);

/// Row n of the result is the calibrated conditional distribution of point n.
Matrix calibrate_conditionals(const SymMatrix& sqdist, double perplexity);

/// p_nm = (p_{m|n} + p_{n|m}) / (2N); result is normalized.
AffinityGraph symmetrize_affinities(const Matrix& conditionals);

/// Perplexity-calibrated symmetric SNE probabilities for the columns of y.
AffinityGraph sne_affinities(const DataMatrix& y, double perplexity);

/// All-ones weights off the diagonal (the default EE repulsive graph).
AffinityGraph complete_graph(std::size_t n);

/**
 * Keeps each point's kappa largest-weight neighbors, symmetrized by union.
 * kappa >= N - 1 returns the graph unchanged; kappa = 0 returns all zeros.
 * Ties are broken towards the lower index.
 */
AffinityGraph knn_sparsify(const AffinityGraph& w, std::size_t kappa);

GraphLaplacian graph_laplacian(const AffinityGraph& w);

/// Laplacian of an arbitrary symmetric (possibly signed) weight matrix.
/// The diagonal of `w` is ignored.
GraphLaplacian graph_laplacian(const Matrix& w);

} // namespace embedopt

#endif
