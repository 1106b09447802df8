#include "embedopt/models.hpp"

#include "embedopt/errors.hpp"

#include <cmath>
#include <string>

namespace embedopt {

KernelValues kernel_eval(KernelKind kind, double t) {
    if (!(t >= 0.0)) throw Error("kernel_eval: argument must be nonnegative");
    if (kind == KernelKind::Gaussian) return {std::exp(-t), -1.0, 1.0, 0.0};
    const double k = 1.0 / (1.0 + t);
    return {k, -k, 2.0 * k * k, k * k};
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::EE: return "ee";
    case ModelKind::SSNE: return "ssne";
    case ModelKind::TSNE: return "tsne";
    }
    return "unknown";
}

EmbeddingModel::EmbeddingModel(ModelKind kind, AffinityGraph attractive, AffinityGraph repulsive, double lambda,
                               int dim)
    : kind_(kind), attractive_(std::move(attractive)), repulsive_(std::move(repulsive)), lambda_(lambda), dim_(dim) {
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw Error("model: lambda must be finite and >= 0");
    if (dim_ < 1) throw Error("model: embedding dimension must be positive");
    if (attractive_.order() < 2) throw Error("model: need at least two points");
    if (normalized() && !attractive_.normalized()) throw Error("model: SNE models need normalized affinities P");
    if (kind_ == ModelKind::EE && repulsive_.order() != attractive_.order()) {
        throw DimensionMismatch("model: attractive and repulsive graphs differ in size");
    }
}

EmbeddingModel EmbeddingModel::elastic(AffinityGraph attractive, AffinityGraph repulsive, double lambda, int dim) {
    return EmbeddingModel(ModelKind::EE, std::move(attractive), std::move(repulsive), lambda, dim);
}

EmbeddingModel EmbeddingModel::ssne(AffinityGraph p, double lambda, int dim) {
    return EmbeddingModel(ModelKind::SSNE, std::move(p), AffinityGraph(), lambda, dim);
}

EmbeddingModel EmbeddingModel::tsne(AffinityGraph p, double lambda, int dim) {
    return EmbeddingModel(ModelKind::TSNE, std::move(p), AffinityGraph(), lambda, dim);
}

EmbeddingModel EmbeddingModel::with_lambda(double lambda) const {
    EmbeddingModel out = *this;
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("model: lambda must be finite and >= 0");
    out.lambda_ = lambda;
    return out;
}

namespace {

void check_embedding(const Embedding& x, const EmbeddingModel& model) {
    if (static_cast<std::size_t>(x.cols()) != model.size()) {
        throw DimensionMismatch("embedding has " + std::to_string(x.cols()) + " points, model has " +
                                std::to_string(model.size()));
    }
}

double log_kernel(KernelKind kind, double t) { return kind == KernelKind::Gaussian ? -t : -std::log1p(t); }

// Squared distances and kernel values for every pair, plus the normalizer
// sum_{n != m} K (accumulated in long double).
struct PairTable {
    Matrix t;
    Matrix k;
    long double z = 0.0L;
};

PairTable pair_table(const Embedding& x, KernelKind kind) {
    const Eigen::Index n = x.cols();
    PairTable out{Matrix::Zero(n, n), Matrix::Zero(n, n), 0.0L};
    for (Eigen::Index m = 0; m < n; ++m) {
        out.k(m, m) = 0.0;
        for (Eigen::Index j = m + 1; j < n; ++j) {
            const double t = (x.col(m) - x.col(j)).squaredNorm();
            const double k = kind == KernelKind::Gaussian ? std::exp(-t) : 1.0 / (1.0 + t);
            out.t(m, j) = out.t(j, m) = t;
            out.k(m, j) = out.k(j, m) = k;
            out.z += 2.0L * k;
        }
    }
    return out;
}

double checked_normalizer(const PairTable& table) {
    const auto z = static_cast<double>(table.z);
    if (!(z > 0.0) || !std::isfinite(z)) throw DegenerateQ("kernel normalizer underflowed to zero");
    return z;
}

// Per-pair coefficient c_nm with w^{xx}_{in,jm} = c_nm (x_in - x_im)(x_jn - x_jm).
Matrix xx_coefficients(const EmbeddingModel& model, const PairTable& table, const Matrix* q) {
    const Eigen::Index n = table.t.rows();
    const double lambda = model.lambda();
    Matrix c = Matrix::Zero(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index j = m + 1; j < n; ++j) {
            double v;
            if (model.normalized()) {
                const KernelValues kv = kernel_eval(model.kernel(), table.t(m, j));
                v = -(kv.k21 * model.attractive()(m, j) - lambda * kv.k2 * (*q)(m, j));
            } else {
                v = lambda * model.repulsive()(m, j) * table.k(m, j);
            }
            c(m, j) = c(j, m) = v;
        }
    }
    return c;
}

Matrix xx_slice(const Embedding& x, const Matrix& c, Eigen::Index i, Eigen::Index jdim) {
    const Eigen::Index n = x.cols();
    Matrix s = Matrix::Zero(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index j = m + 1; j < n; ++j) {
            const double v = c(m, j) * (x(i, m) - x(i, j)) * (x(jdim, m) - x(jdim, j));
            s(m, j) = s(j, m) = v;
        }
    }
    return s;
}

ModelWeights weights_from_table(const Embedding& x, const EmbeddingModel& model, const PairTable& table,
                                bool with_xx) {
    const Eigen::Index n = x.cols();
    const double lambda = model.lambda();
    const Matrix& p = model.attractive().weights();
    ModelWeights out;
    out.w = Matrix::Zero(n, n);

    if (model.normalized()) {
        const double z = checked_normalizer(table);
        Matrix q = table.k / z;
        Matrix wq = Matrix::Zero(n, n);
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = m + 1; j < n; ++j) {
                const double k1 = kernel_eval(model.kernel(), table.t(m, j)).k1;
                out.w(m, j) = out.w(j, m) = -k1 * (p(m, j) - lambda * q(m, j));
                wq(m, j) = wq(j, m) = k1 * q(m, j);
            }
        }
        out.wq = std::move(wq);
        out.q = std::move(q);
    } else {
        const Matrix& wminus = model.repulsive().weights();
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = m + 1; j < n; ++j) {
                out.w(m, j) = out.w(j, m) = p(m, j) - lambda * wminus(m, j) * table.k(m, j);
            }
        }
    }

    if (with_xx) {
        const Matrix c = xx_coefficients(model, table, out.q ? &*out.q : nullptr);
        for (Eigen::Index i = 0; i < x.rows(); ++i) out.wxx.push_back(xx_slice(x, c, i, i));
    }
    return out;
}

// 4 X L(W) without forming L.
Matrix laplacian_product(const Embedding& x, const Matrix& w, double scale) {
    const Vector degrees = w.rowwise().sum();
    Matrix g = x * degrees.asDiagonal();
    g.noalias() -= x * w;
    return scale * g;
}

double error_from_table(const EmbeddingModel& model, const PairTable& table) {
    const Eigen::Index n = table.t.rows();
    const Matrix& p = model.attractive().weights();
    long double attractive = 0.0L;
    long double repulsive = 0.0L;
    if (model.normalized()) {
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = m + 1; j < n; ++j) {
                attractive -= 2.0L * p(m, j) * log_kernel(model.kernel(), table.t(m, j));
            }
        }
        repulsive = std::log(checked_normalizer(table));
    } else {
        const Matrix& wminus = model.repulsive().weights();
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = m + 1; j < n; ++j) {
                attractive += 2.0L * p(m, j) * table.t(m, j);
                repulsive += 2.0L * wminus(m, j) * table.k(m, j);
            }
        }
    }
    return static_cast<double>(attractive + static_cast<long double>(model.lambda()) * repulsive);
}

} // namespace

Matrix compute_q(const Embedding& x, KernelKind kernel) {
    if (x.cols() < 2) throw Error("compute_q: need at least two points");
    const PairTable table = pair_table(x, kernel);
    return table.k / checked_normalizer(table);
}

ModelWeights model_weights(const Embedding& x, const EmbeddingModel& model, bool with_xx) {
    check_embedding(x, model);
    return weights_from_table(x, model, pair_table(x, model.kernel()), with_xx);
}

double eval_error(const Embedding& x, const EmbeddingModel& model) {
    check_embedding(x, model);
    const Eigen::Index n = x.cols();
    const KernelKind kind = model.kernel();
    const Matrix& p = model.attractive().weights();
    long double attractive = 0.0L;
    long double repulsive = 0.0L;
    if (model.normalized()) {
        long double z = 0.0L;
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = m + 1; j < n; ++j) {
                const double t = (x.col(m) - x.col(j)).squaredNorm();
                attractive -= 2.0L * p(m, j) * log_kernel(kind, t);
                z += 2.0L * (kind == KernelKind::Gaussian ? std::exp(-t) : 1.0 / (1.0 + t));
            }
        }
        if (!(z > 0.0L)) throw DegenerateQ("kernel normalizer underflowed to zero");
        repulsive = std::log(z);
    } else {
        const Matrix& wminus = model.repulsive().weights();
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = m + 1; j < n; ++j) {
                const double t = (x.col(m) - x.col(j)).squaredNorm();
                attractive += 2.0L * p(m, j) * t;
                if (wminus(m, j) != 0.0) repulsive += 2.0L * wminus(m, j) * std::exp(-t);
            }
        }
    }
    return static_cast<double>(attractive + static_cast<long double>(model.lambda()) * repulsive);
}

Matrix eval_gradient(const Embedding& x, const EmbeddingModel& model) {
    check_embedding(x, model);
    const PairTable table = pair_table(x, model.kernel());
    return laplacian_product(x, weights_from_table(x, model, table, false).w, 4.0);
}

ErrorAndGradient eval_error_and_gradient(const Embedding& x, const EmbeddingModel& model) {
    check_embedding(x, model);
    const PairTable table = pair_table(x, model.kernel());
    ErrorAndGradient out;
    out.error = error_from_table(model, table);
    out.gradient = laplacian_product(x, weights_from_table(x, model, table, false).w, 4.0);
    return out;
}

GraphLaplacian attractive_laplacian(const EmbeddingModel& model) {
    if (!model.normalized()) return graph_laplacian(model.attractive());
    // Weights -K1(t) p_nm frozen at X = 0 (t = 0).
    const double scale = -kernel_eval(model.kernel(), 0.0).k1;
    return graph_laplacian(Matrix(scale * model.attractive().weights()));
}

Matrix oracle_full_hessian(const Embedding& x, const EmbeddingModel& model) {
    check_embedding(x, model);
    const std::size_t npoints = model.size();
    if (npoints > kOracleMaxPoints) {
        throw OracleScaleExceeded("oracle_full_hessian: N = " + std::to_string(npoints) + " exceeds " +
                                  std::to_string(kOracleMaxPoints));
    }
    const Eigen::Index n = x.cols();
    const Eigen::Index d = x.rows();
    const PairTable table = pair_table(x, model.kernel());
    const ModelWeights weights = weights_from_table(x, model, table, false);
    const Matrix l = graph_laplacian(weights.w).matrix.to_dense();
    const Matrix c = xx_coefficients(model, table, weights.q ? &*weights.q : nullptr);

    Matrix h = Matrix::Zero(n * d, n * d);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            for (Eigen::Index i = 0; i < d; ++i) h(a * d + i, b * d + i) += 4.0 * l(a, b);
        }
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const Matrix lxx = graph_laplacian(xx_slice(x, c, i, j)).matrix.to_dense();
            for (Eigen::Index a = 0; a < n; ++a) {
                for (Eigen::Index b = 0; b < n; ++b) h(a * d + i, b * d + j) += 8.0 * lxx(a, b);
            }
        }
    }
    if (model.normalized()) {
        const Matrix xlq = laplacian_product(x, *weights.wq, 1.0);
        const Eigen::Map<const Vector> v(xlq.data(), n * d);
        h.noalias() -= 16.0 * model.lambda() * v * v.transpose();
    }
    // Symmetrize away rounding differences between the two triangles.
    return 0.5 * (h + h.transpose());
}

Matrix hessian_diagonal(const Embedding& x, const EmbeddingModel& model) {
    check_embedding(x, model);
    const Eigen::Index n = x.cols();
    const Eigen::Index d = x.rows();
    const PairTable table = pair_table(x, model.kernel());
    const ModelWeights weights = weights_from_table(x, model, table, false);
    const Matrix c = xx_coefficients(model, table, weights.q ? &*weights.q : nullptr);
    const Vector degrees = weights.w.rowwise().sum();

    Matrix diag(d, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index i = 0; i < d; ++i) {
            double lxx = 0.0;
            for (Eigen::Index b = 0; b < n; ++b) {
                const double delta = x(i, a) - x(i, b);
                lxx += c(a, b) * delta * delta;
            }
            diag(i, a) = 4.0 * degrees(a) + 8.0 * lxx;
        }
    }
    if (model.normalized()) {
        const Matrix xlq = laplacian_product(x, *weights.wq, 1.0);
        diag.array() -= 16.0 * model.lambda() * xlq.array().square();
    }
    return diag;
}

} // namespace embedopt
