#include "embedopt/affinity.hpp"
#include "embedopt/errors.hpp"
#include "embedopt/linalg.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace embedopt;
using namespace testing_support;

namespace {

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
    const Matrix a = random_matrix(rng, n, n);
    return a.transpose() * a + 0.1 * Matrix::Identity(n, n);
}

} // namespace

TEST_CASE("cholesky of a 1x1 matrix is its square root") {
    const CholeskyFactor r = cholesky_factorize(SymMatrix(Matrix::Constant(1, 1, 4.0)), 0.0);
    CHECK(r.upper()(0, 0) == doctest::Approx(2.0));
    CHECK_FALSE(r.is_sparse());
}

TEST_CASE("damped rank-one Laplacian factorizes") {
    Matrix b(2, 2);
    b << 1, -1, -1, 1;
    const CholeskyFactor r = cholesky_factorize(SymMatrix(b), 1e-8);
    Matrix damped = b + 1e-8 * Matrix::Identity(2, 2);
    CHECK((r.reconstruct() - damped).cwiseAbs().maxCoeff() <= 1e-8 * damped.cwiseAbs().maxCoeff());
    CHECK(r.upper().diagonal().minCoeff() > 0.0);
}

TEST_CASE("undamped singular Laplacian or indefinite matrix is rejected") {
    Matrix b(2, 2);
    b << 1, 2, 2, 1;
    CHECK_THROWS_AS(cholesky_factorize(SymMatrix(b), 0.0), NotPositiveDefinite);
    CHECK_THROWS_AS(cholesky_factorize(SymMatrix(b), -1.0), Error);
}

TEST_CASE("random Laplacian factor reconstructs B + mu I") {
    std::mt19937_64 rng(7);
    const GraphLaplacian l = graph_laplacian(random_weights(rng, 10));
    const double mu = 1e-10 * l.degrees.minCoeff();
    const CholeskyFactor r = cholesky_factorize(l.matrix, mu);
    const Matrix damped = l.matrix.to_dense() + mu * Matrix::Identity(10, 10);
    CHECK((r.reconstruct() - damped).cwiseAbs().maxCoeff() <= 1e-8 * damped.cwiseAbs().maxCoeff());
}

TEST_CASE("sparse factorization uses a recorded fill-reducing permutation") {
    std::mt19937_64 rng(11);
    const Eigen::Index n = 60;
    const GraphLaplacian l = graph_laplacian(random_weights(rng, n, 0.05));
    REQUIRE(l.matrix.is_sparse());
    const CholeskyFactor r = cholesky_factorize(l.matrix, 1e-3);
    CHECK(r.is_sparse());
    std::vector<int> perm = r.permutation();
    std::sort(perm.begin(), perm.end());
    for (int i = 0; i < n; ++i) CHECK(perm[static_cast<std::size_t>(i)] == i);
    const Matrix damped = l.matrix.to_dense() + 1e-3 * Matrix::Identity(n, n);
    CHECK((r.reconstruct() - damped).cwiseAbs().maxCoeff() <= 1e-8 * damped.cwiseAbs().maxCoeff());

    // Same factorization twice gives the same ordering.
    CHECK(cholesky_factorize(l.matrix, 1e-3).permutation() == r.permutation());
}

TEST_CASE("dense fallback above 25 percent density") {
    std::mt19937_64 rng(3);
    Matrix w = random_weights(rng, 12);
    const GraphLaplacian l = graph_laplacian(w);
    const SymMatrix as_sparse(l.matrix.to_sparse());
    REQUIRE(as_sparse.density() > kDenseFallbackDensity);
    CHECK_FALSE(cholesky_factorize(as_sparse, 1e-6).is_sparse());
}

TEST_CASE("solve_via_factor on small systems") {
    SUBCASE("identity") {
        const CholeskyFactor r = cholesky_factorize(SymMatrix(Matrix::Identity(1, 1)), 0.0);
        const Matrix p = solve_via_factor(r, Matrix::Constant(1, 1, 3.0));
        CHECK(p(0, 0) == doctest::Approx(-3.0));
    }
    SUBCASE("diagonal") {
        Matrix b = Matrix::Zero(2, 2);
        b.diagonal() << 2, 4;
        const CholeskyFactor r = cholesky_factorize(SymMatrix(b), 0.0);
        Matrix g(1, 2);
        g << 2, 8;
        const Matrix p = solve_via_factor(r, g);
        CHECK(p(0, 0) == doctest::Approx(-1.0));
        CHECK(p(0, 1) == doctest::Approx(-2.0));
    }
    SUBCASE("dimension mismatch") {
        const CholeskyFactor r = cholesky_factorize(SymMatrix(Matrix::Identity(3, 3)), 0.0);
        CHECK_THROWS_AS(solve_via_factor(r, Matrix::Zero(2, 4)), DimensionMismatch);
        CHECK_THROWS_AS(solve_via_factor(CholeskyFactor{}, Matrix::Zero(2, 3)), CacheMissing);
    }
}

TEST_CASE("property: factor solves recover -g for random psd systems") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 50);
    std::uniform_int_distribution<int> dims(1, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = size(rng);
        const Matrix b = random_spd(rng, n);
        const double mu = 1e-6;
        const CholeskyFactor r = cholesky_factorize(SymMatrix(Matrix(0.5 * (b + b.transpose()))), mu);
        const Matrix g = random_matrix(rng, dims(rng), n);
        const Matrix p = solve_via_factor(r, g);
        const Matrix bb = 0.5 * (b + b.transpose()) + mu * Matrix::Identity(n, n);
        const Matrix residual = (bb * p.transpose()).transpose() + g;
        CHECK(residual.norm() <= 1e-8 * g.norm());
    }
}

TEST_CASE("linear_cg examples") {
    const LinearOperator identity = [](const Vector& v) { return v; };
    Vector b(3);
    b << 1, -2, 5;
    LinearCgResult r = linear_cg(identity, b, Vector::Zero(3), 1e-12, 10);
    CHECK(r.iterations == 1);
    CHECK((r.x - b).norm() < 1e-14);

    const LinearOperator diag = [](const Vector& v) {
        Vector out = v;
        out(1) *= 2.0;
        return out;
    };
    Vector b2(2);
    b2 << 1, 2;
    r = linear_cg(diag, b2, Vector::Zero(2), 1e-12, 10);
    CHECK(r.iterations <= 2);
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == doctest::Approx(1.0));

    // Zero right-hand side returns zero without iterating.
    r = linear_cg(diag, Vector::Zero(2), Vector::Ones(2), 0.1, 10);
    CHECK(r.iterations == 0);
    CHECK(r.x.norm() == 0.0);
}

TEST_CASE("linear_cg honours the iteration cap and reports breakdown") {
    std::mt19937_64 rng(5);
    const Matrix a = random_spd(rng, 30);
    const LinearOperator apply = [&](const Vector& v) { return Vector(a * v); };
    const Vector b = random_matrix(rng, 30, 1);
    const LinearCgResult capped = linear_cg(apply, b, Vector::Zero(30), 1e-14, 3);
    CHECK(capped.iterations == 3);

    const LinearCgResult loose = linear_cg(apply, b, Vector::Zero(30), 0.1, 50);
    CHECK((a * loose.x - b).norm() <= 0.1 * b.norm() * 1.0000001);

    const LinearOperator negative = [](const Vector& v) { return Vector(-v); };
    CHECK_THROWS_AS(linear_cg(negative, b, Vector::Zero(30), 1e-6, 10), BreakdownNonPSD);
}

TEST_CASE("property: linear_cg converges in at most N iterations") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> size(1, 20);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = size(rng);
        // Well-conditioned spectrum so rounding does not delay termination.
        const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(rng, n, n)).householderQ();
        Vector eig = Vector::LinSpaced(n, 1.0, 4.0);
        const Matrix a = q * eig.asDiagonal() * q.transpose();
        const LinearOperator apply = [&](const Vector& v) { return Vector(a * v); };
        const Vector b = random_matrix(rng, n, 1);
        const LinearCgResult r = linear_cg(apply, b, Vector::Zero(n), 1e-10, 1000);
        CHECK(r.iterations <= n);
        CHECK((a * r.x - b).norm() <= 1e-9 * b.norm());
    }
}
