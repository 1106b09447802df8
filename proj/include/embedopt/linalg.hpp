#ifndef EMBEDOPT_LINALG_HPP
#define EMBEDOPT_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

namespace embedopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/**
 * Symmetric N x N matrix held either densely or as a sparse matrix.
 *
 * Both triangles are stored; construction rejects matrices that are not
 * exactly symmetric or that contain non-finite values.
 */
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix dense);
    explicit SymMatrix(SparseMatrix sparse);

    std::size_t order() const;
    bool is_sparse() const { return std::holds_alternative<SparseMatrix>(storage_); }

    const Matrix& dense() const;
    const SparseMatrix& sparse() const;

    Matrix to_dense() const;
    SparseMatrix to_sparse() const;

    /// Number of structurally nonzero entries (dense storage counts values != 0).
    std::size_t nonzeros() const;
    double density() const;

    double operator()(std::size_t i, std::size_t j) const;

    /// Returns A * V for an N x k block of columns.
    Matrix multiply(const Matrix& v) const;

private:
    std::variant<Matrix, SparseMatrix> storage_;
};

/// Density above which sparse input is factorized with the dense routine.
inline constexpr double kDenseFallbackDensity = 0.25;

/**
 * Cholesky factor R (upper triangular) of B + mu I, so that R^T R = B + mu I.
 *
 * Sparse factors use Eigen's AMD fill-reducing ordering; the permutation is
 * exposed through permutation().  Instances are immutable and may be shared
 * between threads.
 */
class CholeskyFactor {
public:
    using DenseSolver = Eigen::LLT<Matrix, Eigen::Upper>;
    using SparseSolver = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

    CholeskyFactor() = default;

    std::size_t order() const { return order_; }
    double damping() const { return damping_; }
    bool is_sparse() const { return static_cast<bool>(sparse_); }
    bool valid() const { return dense_ || sparse_; }

    /// Fill-reducing permutation; identity for dense factors.
    std::vector<int> permutation() const;

    /// Upper-triangular factor of the permuted matrix, as a dense matrix.
    Matrix upper() const;

    /// R^T R mapped back to the original ordering.
    Matrix reconstruct() const;

    std::size_t factor_nonzeros() const;

    /// Solves (R^T R) x = rhs for each column of rhs.
    Matrix solve_columns(const Matrix& rhs) const;

private:
    friend CholeskyFactor cholesky_factorize(const SymMatrix& b, double mu);

    std::size_t order_ = 0;
    double damping_ = 0.0;
    std::shared_ptr<const DenseSolver> dense_;
    std::shared_ptr<const SparseSolver> sparse_;
};

/// Factorizes B + mu I.  Throws NotPositiveDefinite when a pivot is <= 0.
CholeskyFactor cholesky_factorize(const SymMatrix& b, double mu);

/**
 * Returns P with (R^T R) p_i = -g_i for every coordinate row i of the
 * d x N matrix g.  Throws DimensionMismatch when g has the wrong width.
 */
Matrix solve_via_factor(const CholeskyFactor& factor, const Matrix& g);

using LinearOperator = std::function<Vector(const Vector&)>;

struct LinearCgResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/**
 * Conjugate gradients for a symmetric psd operator, started at x0.
 *
 * Stops when ||B x - b|| <= rel_tol ||b|| or after max_iter iterations.
 * Throws BreakdownNonPSD when a search direction has p^T B p <= 0.
 */
LinearCgResult linear_cg(const LinearOperator& apply_b, const Vector& b, const Vector& x0,
                         double rel_tol, int max_iter);

} // namespace embedopt

#endif
