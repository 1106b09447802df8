#include "embedopt/linalg.hpp"

#include "embedopt/errors.hpp"

#include <cmath>
#include <string>

namespace embedopt {

namespace {

void require_square(Eigen::Index rows, Eigen::Index cols) {
    if (rows != cols) {
        throw DimensionMismatch("symmetric matrix must be square, got " + std::to_string(rows) + "x" +
                                std::to_string(cols));
    }
}

} // namespace

SymMatrix::SymMatrix(Matrix dense) {
    require_square(dense.rows(), dense.cols());
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            if (!std::isfinite(dense(i, j))) throw Error("symmetric matrix has non-finite entry");
            if (dense(i, j) != dense(j, i)) throw Error("matrix is not symmetric");
        }
    }
    storage_ = std::move(dense);
}

SymMatrix::SymMatrix(SparseMatrix sparse) {
    require_square(sparse.rows(), sparse.cols());
    sparse.makeCompressed();
    for (int k = 0; k < sparse.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sparse, k); it; ++it) {
            if (!std::isfinite(it.value())) throw Error("symmetric matrix has non-finite entry");
            if (sparse.coeff(it.col(), it.row()) != it.value()) throw Error("matrix is not symmetric");
        }
    }
    storage_ = std::move(sparse);
}

std::size_t SymMatrix::order() const {
    return std::visit([](const auto& m) { return static_cast<std::size_t>(m.rows()); }, storage_);
}

const Matrix& SymMatrix::dense() const {
    if (is_sparse()) throw Error("SymMatrix holds sparse storage");
    return std::get<Matrix>(storage_);
}

const SparseMatrix& SymMatrix::sparse() const {
    if (!is_sparse()) throw Error("SymMatrix holds dense storage");
    return std::get<SparseMatrix>(storage_);
}

Matrix SymMatrix::to_dense() const {
    if (is_sparse()) return Matrix(sparse());
    return dense();
}

SparseMatrix SymMatrix::to_sparse() const {
    if (is_sparse()) return sparse();
    return dense().sparseView(0.0, 0.0);
}

std::size_t SymMatrix::nonzeros() const {
    if (is_sparse()) return static_cast<std::size_t>(sparse().nonZeros());
    return static_cast<std::size_t>((dense().array() != 0.0).count());
}

double SymMatrix::density() const {
    const double n = static_cast<double>(order());
    return n == 0.0 ? 0.0 : static_cast<double>(nonzeros()) / (n * n);
}

double SymMatrix::operator()(std::size_t i, std::size_t j) const {
    const auto r = static_cast<Eigen::Index>(i);
    const auto c = static_cast<Eigen::Index>(j);
    if (is_sparse()) return sparse().coeff(r, c);
    return dense()(r, c);
}

Matrix SymMatrix::multiply(const Matrix& v) const {
    if (static_cast<std::size_t>(v.rows()) != order()) throw DimensionMismatch("multiply: row count mismatch");
    if (is_sparse()) return sparse() * v;
    return dense() * v;
}

std::vector<int> CholeskyFactor::permutation() const {
    std::vector<int> perm(order_);
    if (sparse_) {
        const auto& indices = sparse_->permutationP().indices();
        for (std::size_t i = 0; i < order_; ++i) perm[i] = indices(static_cast<Eigen::Index>(i));
    } else {
        for (std::size_t i = 0; i < order_; ++i) perm[i] = static_cast<int>(i);
    }
    return perm;
}

Matrix CholeskyFactor::upper() const {
    if (dense_) return dense_->matrixU();
    if (sparse_) return Matrix(SparseMatrix(sparse_->matrixU()));
    throw CacheMissing("Cholesky factor is empty");
}

Matrix CholeskyFactor::reconstruct() const {
    const Matrix r = upper();
    const Matrix rtr = r.transpose() * r;
    if (!sparse_) return rtr;
    const auto& p = sparse_->permutationP();
    return p.inverse() * rtr * p;
}

std::size_t CholeskyFactor::factor_nonzeros() const {
    if (sparse_) return static_cast<std::size_t>(SparseMatrix(sparse_->matrixL()).nonZeros());
    return order_ * (order_ + 1) / 2;
}

Matrix CholeskyFactor::solve_columns(const Matrix& rhs) const {
    if (static_cast<std::size_t>(rhs.rows()) != order_) throw DimensionMismatch("solve: right-hand side length mismatch");
    if (dense_) return dense_->solve(rhs);
    if (sparse_) return sparse_->solve(rhs);
    throw CacheMissing("Cholesky factor is empty");
}

CholeskyFactor cholesky_factorize(const SymMatrix& b, double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error("cholesky_factorize: damping must be finite and >= 0");
    const auto n = static_cast<Eigen::Index>(b.order());
    CholeskyFactor out;
    out.order_ = b.order();
    out.damping_ = mu;

    if (b.is_sparse() && b.density() <= kDenseFallbackDensity) {
        SparseMatrix damped = b.sparse();
        SparseMatrix identity(n, n);
        identity.setIdentity();
        damped += mu * identity;
        damped.makeCompressed();
        auto solver = std::make_shared<CholeskyFactor::SparseSolver>();
        solver->compute(damped);
        if (solver->info() != Eigen::Success) {
            throw NotPositiveDefinite("sparse Cholesky met a nonpositive pivot");
        }
        out.sparse_ = std::move(solver);
        return out;
    }

    Matrix damped = b.to_dense();
    damped.diagonal().array() += mu;
    auto solver = std::make_shared<CholeskyFactor::DenseSolver>(damped);
    if (solver->info() != Eigen::Success) throw NotPositiveDefinite("dense Cholesky met a nonpositive pivot");
    out.dense_ = std::move(solver);
    return out;
}

Matrix solve_via_factor(const CholeskyFactor& factor, const Matrix& g) {
    if (!factor.valid()) throw CacheMissing("solve_via_factor: factor not computed");
    if (static_cast<std::size_t>(g.cols()) != factor.order()) {
        throw DimensionMismatch("solve_via_factor: gradient has " + std::to_string(g.cols()) +
                                " points, factor has order " + std::to_string(factor.order()));
    }
    // Each coordinate row of g is an independent length-N system.
    return -factor.solve_columns(g.transpose()).transpose();
}

LinearCgResult linear_cg(const LinearOperator& apply_b, const Vector& b, const Vector& x0, double rel_tol,
                         int max_iter) {
    if (x0.size() != b.size()) throw DimensionMismatch("linear_cg: x0 and b differ in length");
    if (!(rel_tol > 0.0)) throw Error("linear_cg: rel_tol must be positive");

    LinearCgResult out;
    const double b_norm = b.norm();
    if (b_norm == 0.0) {
        out.x = Vector::Zero(b.size());
        return out;
    }

    out.x = x0;
    Vector r = b - apply_b(out.x);
    double rr = r.squaredNorm();
    const double target = rel_tol * b_norm;
    Vector p = r;
    int it = 0;
    while (std::sqrt(rr) > target && it < max_iter) {
        const Vector bp = apply_b(p);
        const double curvature = p.dot(bp);
        if (!(curvature > 0.0)) throw BreakdownNonPSD("linear_cg: nonpositive curvature p^T B p");
        const double alpha = rr / curvature;
        out.x += alpha * p;
        r -= alpha * bp;
        const double rr_next = r.squaredNorm();
        p = r + (rr_next / rr) * p;
        rr = rr_next;
        ++it;
    }
    out.iterations = it;
    out.relative_residual = std::sqrt(rr) / b_norm;
    return out;
}

} // namespace embedopt
