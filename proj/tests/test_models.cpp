#include "embedopt/errors.hpp"
#include "embedopt/models.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace embedopt;
using namespace testing_support;

namespace {

constexpr Kind kAllKinds[] = {Kind::EE, Kind::SSNE, Kind::TSNE};

double kl(const Matrix& p, const Matrix& q) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i) > 0.0) s += p(i) * std::log(p(i) / q(i));
    return s;
}

} // namespace

TEST_CASE("closed-form kernel values") {
    const KernelValues g = kernel_eval(KernelKind::Gaussian, 7.0);
    CHECK(g.k == doctest::Approx(std::exp(-7.0)));
    CHECK(g.k1 == -1.0);
    CHECK(g.k2 == 1.0);
    CHECK(g.k21 == 0.0);

    const KernelValues t = kernel_eval(KernelKind::StudentT, 1.0);
    CHECK(t.k == 0.5);
    CHECK(t.k1 == -0.5);
    CHECK(t.k2 == 0.5);
    CHECK(t.k21 == 0.25);

    CHECK_THROWS(kernel_eval(KernelKind::Gaussian, -1.0));
}

TEST_CASE("kernel identities against finite differences") {
    for (KernelKind kind : {KernelKind::Gaussian, KernelKind::StudentT}) {
        const double t = 0.3;
        const double h = 1e-6;
        const KernelValues kv = kernel_eval(kind, t);
        CHECK(std::abs(kv.k21 - (kv.k2 - kv.k1 * kv.k1)) <= 1e-12);
        const double dlog = (std::log(kernel_eval(kind, t + h).k) - std::log(kernel_eval(kind, t - h).k)) / (2 * h);
        CHECK(std::abs(kv.k1 - dlog) <= 1e-6 * std::abs(kv.k1));
        const double h2 = 1e-4;
        const double k2fd =
            (kernel_eval(kind, t + h2).k - 2 * kv.k + kernel_eval(kind, t - h2).k) / (h2 * h2) / kv.k;
        CHECK(std::abs(kv.k2 - k2fd) <= 1e-5 * std::abs(kv.k2));
        // Positive and decreasing.
        CHECK(kv.k > 0.0);
        CHECK(kv.k1 < 0.0);
    }
}

TEST_CASE("q matrix") {
    std::mt19937_64 rng(2);
    const Matrix q2 = compute_q(random_matrix(rng, 2, 2), KernelKind::Gaussian);
    CHECK(q2(0, 1) == doctest::Approx(0.5));
    CHECK(q2(1, 0) == doctest::Approx(0.5));

    const Matrix q4 = compute_q(Matrix::Zero(2, 4), KernelKind::StudentT);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(q4(i, j) == doctest::Approx(i == j ? 0.0 : 1.0 / 12.0));

    const Matrix x = random_matrix(rng, 2, 15);
    const Matrix q = compute_q(x, KernelKind::StudentT);
    double z = 0.0;
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < 15; ++j)
            if (i != j) z += 1.0 / (1.0 + (x.col(i) - x.col(j)).squaredNorm());
    for (int i = 0; i < 15; ++i) {
        for (int j = 0; j < 15; ++j) {
            const double expect = i == j ? 0.0 : 1.0 / (1.0 + (x.col(i) - x.col(j)).squaredNorm()) / z;
            CHECK(std::abs(q(i, j) - expect) <= 1e-12 * expect);
        }
    }
    CHECK(std::abs(q.sum() - 1.0) <= 1e-10);

    Matrix far(1, 2);
    far << 0, 100;
    CHECK_THROWS_AS(compute_q(far, KernelKind::Gaussian), DegenerateQ);
}

TEST_CASE("model weights special cases") {
    SUBCASE("s-SNE with uniform P at X = 0 has zero weights") {
        Matrix p = Matrix::Constant(5, 5, 1.0 / 20.0);
        p.diagonal().setZero();
        const EmbeddingModel m = EmbeddingModel::ssne(AffinityGraph(p, true), 1.0);
        CHECK(model_weights(Matrix::Zero(2, 5), m).w.cwiseAbs().maxCoeff() <= 1e-17);
    }
    SUBCASE("EE at lambda = 0 uses W+ only") {
        std::mt19937_64 rng(3);
        const EmbeddingModel m = random_model(rng, Kind::EE, 6, 0.0);
        const Matrix w = model_weights(random_matrix(rng, 2, 6), m).w;
        CHECK(w == m.attractive().weights());
    }
}

TEST_CASE("generic weights reproduce the specialized s-SNE and t-SNE displays") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index n = 10;
        const double lambda = 0.7 + trial;
        const Matrix x = random_matrix(rng, 2, n);
        const AffinityGraph p = random_probabilities(rng, n);

        const ModelWeights t = model_weights(x, EmbeddingModel::tsne(p, lambda), true);
        const ModelWeights s = model_weights(x, EmbeddingModel::ssne(p, lambda), true);
        const Matrix qt = compute_q(x, KernelKind::StudentT);
        const Matrix qs = compute_q(x, KernelKind::Gaussian);
        for (Eigen::Index a = 0; a < n; ++a) {
            for (Eigen::Index b = 0; b < n; ++b) {
                if (a == b) continue;
                const double k = 1.0 / (1.0 + (x.col(a) - x.col(b)).squaredNorm());
                const double pab = p(a, b);
                // t-SNE display.
                CHECK(std::abs(t.w(a, b) - (pab - lambda * qt(a, b)) * k) <= 1e-12);
                CHECK(std::abs((*t.wq)(a, b) - (-qt(a, b) * k)) <= 1e-12);
                for (Eigen::Index i = 0; i < 2; ++i) {
                    const double dx = x(i, a) - x(i, b);
                    CHECK(std::abs(t.wxx[i](a, b) - (-(pab - 2 * lambda * qt(a, b)) * dx * dx * k * k)) <= 1e-12);
                    CHECK(std::abs(s.wxx[i](a, b) - lambda * qs(a, b) * dx * dx) <= 1e-12);
                }
                // s-SNE display.
                CHECK(std::abs(s.w(a, b) - (pab - lambda * qs(a, b))) <= 1e-12);
                CHECK(std::abs((*s.wq)(a, b) + qs(a, b)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("error values by hand") {
    std::mt19937_64 rng(12);
    const EmbeddingModel ee = random_model(rng, Kind::EE, 7, 3.0);
    CHECK(eval_error(Matrix::Zero(2, 7), ee) == doctest::Approx(3.0 * ee.repulsive().weights().sum()));

    Matrix w(2, 2);
    w << 0, 1, 1, 0;
    const EmbeddingModel two =
        EmbeddingModel::elastic(AffinityGraph(w, false), AffinityGraph(w, false), 0.0, 1);
    Matrix x(1, 2);
    x << 0, 1;
    CHECK(eval_error(x, two) == doctest::Approx(2.0));
    const Matrix g = eval_gradient(x, two);
    CHECK(g(0, 0) == doctest::Approx(-4.0));
    CHECK(g(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("s-SNE error equals KL(P||Q) up to a constant") {
    std::mt19937_64 rng(13);
    const EmbeddingModel m = random_model(rng, Kind::SSNE, 8, 1.0);
    const Matrix& p = m.attractive().weights();
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x1 = random_matrix(rng, 2, 8);
        const Matrix x2 = random_matrix(rng, 2, 8);
        const double de = eval_error(x1, m) - eval_error(x2, m);
        const double dkl = kl(p, compute_q(x1, KernelKind::Gaussian)) - kl(p, compute_q(x2, KernelKind::Gaussian));
        CHECK(std::abs(de - dkl) <= 1e-10);
    }
}

TEST_CASE("gradient matches central differences of the error") {
    std::mt19937_64 rng(14);
    for (Kind kind : kAllKinds) {
        for (int trial = 0; trial < 5; ++trial) {
            const EmbeddingModel m = random_model(rng, kind, 10, kind == Kind::EE ? 2.0 : 1.0);
            const Matrix x = random_matrix(rng, 2, 10);
            const Matrix fd = fd_gradient([&](const Matrix& z) { return eval_error(z, m); }, x, 1e-5);
            const Matrix g = eval_gradient(x, m);
            CHECK(max_rel_error(g, fd) <= 1e-5);
            const ErrorAndGradient both = eval_error_and_gradient(x, m);
            CHECK(both.error == doctest::Approx(eval_error(x, m)).epsilon(1e-13));
            CHECK((both.gradient - g).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    std::mt19937_64 rng0(1);
    CHECK(eval_gradient(Matrix::Zero(2, 6), random_model(rng0, Kind::TSNE, 6, 1.0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attractive Laplacian") {
    Matrix p = Matrix::Constant(3, 3, 1.0 / 6.0);
    p.diagonal().setZero();
    const GraphLaplacian l = attractive_laplacian(EmbeddingModel::ssne(AffinityGraph(p, true)));
    for (int i = 0; i < 3; ++i) CHECK(l.degrees(i) == doctest::Approx(2.0 / 6.0));

    std::mt19937_64 rng(15);
    const EmbeddingModel ee = random_model(rng, Kind::EE, 9, 1.0);
    CHECK(attractive_laplacian(ee).matrix.to_dense() == graph_laplacian(ee.attractive()).matrix.to_dense());

    const AffinityGraph prob = random_probabilities(rng, 9);
    const Matrix lt = attractive_laplacian(EmbeddingModel::tsne(prob)).matrix.to_dense();
    const Matrix ls = attractive_laplacian(EmbeddingModel::ssne(prob)).matrix.to_dense();
    CHECK((lt - ls).cwiseAbs().maxCoeff() == 0.0);
    CHECK(min_eigenvalue(lt) >= -1e-10);
}

TEST_CASE("full Hessian matches finite differences of the gradient") {
    std::mt19937_64 rng(16);
    for (Kind kind : kAllKinds) {
        for (int trial = 0; trial < 3; ++trial) {
            const EmbeddingModel m = random_model(rng, kind, 5, kind == Kind::EE ? 2.0 : 1.3);
            const Matrix x = random_matrix(rng, 2, 5);
            const Matrix h = oracle_full_hessian(x, m);
            const Matrix fd = fd_jacobian([&](const Matrix& z) { return eval_gradient(z, m); }, x, 1e-4);
            CHECK(h == h.transpose());
            const double scale = fd.cwiseAbs().maxCoeff();
            for (Eigen::Index k = 0; k < h.size(); ++k) {
                if (std::abs(fd(k)) > 1e-8) CHECK(std::abs(h(k) - fd(k)) <= 1e-4 * std::max(std::abs(fd(k)), 1e-3 * scale));
            }
            const Matrix diag = hessian_diagonal(x, m);
            const Eigen::Map<const Vector> flat(diag.data(), diag.size());
            CHECK((flat - h.diagonal()).cwiseAbs().maxCoeff() <= 1e-12 * h.diagonal().cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("Hessian special cases") {
    std::mt19937_64 rng(17);
    const EmbeddingModel ee = random_model(rng, Kind::EE, 6, 0.0, 3);
    const Matrix h = oracle_full_hessian(random_matrix(rng, 3, 6), ee);
    const Matrix l = graph_laplacian(ee.attractive()).matrix.to_dense();
    Matrix kron = Matrix::Zero(18, 18);
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
            for (int i = 0; i < 3; ++i) kron(a * 3 + i, b * 3 + i) = 4.0 * l(a, b);
    CHECK((h - kron).cwiseAbs().maxCoeff() <= 1e-14);

    // Translating every point along one coordinate is in the null space.
    for (Kind kind : kAllKinds) {
        const EmbeddingModel m = random_model(rng, kind, 6, 1.0);
        const Matrix hz = oracle_full_hessian(Matrix::Zero(2, 6), m);
        for (int i = 0; i < 2; ++i) {
            Vector shift = Vector::Zero(12);
            for (int a = 0; a < 6; ++a) shift(a * 2 + i) = 1.0;
            CHECK((hz * shift).cwiseAbs().maxCoeff() <= 1e-12);
        }
        CHECK(hz == hz.transpose());
    }

    std::mt19937_64 big(18);
    const EmbeddingModel large = random_model(big, Kind::SSNE, 201, 1.0);
    CHECK_THROWS_AS(oracle_full_hessian(Matrix::Zero(2, 201), large), OracleScaleExceeded);
}

TEST_CASE("property: shift and rotation invariance") {
    std::mt19937_64 rng(19);
    for (Kind kind : kAllKinds) {
        for (int trial = 0; trial < 10; ++trial) {
            const EmbeddingModel m = random_model(rng, kind, 12, 1.5);
            const Matrix x = random_matrix(rng, 2, 12);
            const double e = eval_error(x, m);
            const Vector c = random_matrix(rng, 2, 1);
            const Matrix shifted = x.colwise() + c;
            CHECK(std::abs(eval_error(shifted, m) - e) <= 1e-10 * (1.0 + std::abs(e)));
            const double angle = std::uniform_real_distribution<double>(0.0, 6.28)(rng);
            Matrix u(2, 2);
            u << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
            CHECK(std::abs(eval_error(u * x, m) - e) <= 1e-10 * (1.0 + std::abs(e)));
            const Matrix g = eval_gradient(x, m);
            CHECK(g.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("model construction rejects invalid inputs") {
    std::mt19937_64 rng(20);
    const AffinityGraph unnormalized(random_weights(rng, 5), false);
    CHECK_THROWS(EmbeddingModel::ssne(unnormalized));
    CHECK_THROWS(EmbeddingModel::elastic(unnormalized, unnormalized, -1.0));
    CHECK_THROWS(EmbeddingModel::elastic(unnormalized, AffinityGraph(random_weights(rng, 4), false), 1.0));
    const EmbeddingModel m = EmbeddingModel::elastic(unnormalized, unnormalized, 1.0);
    CHECK_THROWS_AS(eval_error(Matrix::Zero(2, 4), m), DimensionMismatch);
    CHECK(m.with_lambda(5.0).lambda() == 5.0);
}
