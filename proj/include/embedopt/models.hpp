#ifndef EMBEDOPT_MODELS_HPP
#define EMBEDOPT_MODELS_HPP

#include "embedopt/affinity.hpp"
#include "embedopt/linalg.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace embedopt {

/// Low-dimensional embedding X (d x N); column n is the image of point n.
/// Column-major storage makes vec(X) point-major.
using Embedding = Matrix;

enum class KernelKind { Gaussian, StudentT };

/// K(t) and the log-derivative functions used by the gradient and Hessian.
struct KernelValues {
    double k;     // K(t)
    double k1;    // (log K)'
    double k2;    // K'' / K
    double k21;   // (log K)'' = K2 - K1^2
};

/// Gaussian: K = e^{-t}.  Student-t: K = 1 / (1 + t).  Requires t >= 0.
KernelValues kernel_eval(KernelKind kind, double t);

enum class ModelKind { EE, SSNE, TSNE };

std::string_view to_string(ModelKind kind);

/**
 * The objective E(X) = E+(X) + lambda E-(X).
 *
 * For the normalized models (s-SNE, t-SNE) `attractive` holds the
 * probabilities P and `repulsive` is unused.  For EE both graphs are
 * unnormalized weights.
 */
class EmbeddingModel {
public:
    static EmbeddingModel elastic(AffinityGraph attractive, AffinityGraph repulsive, double lambda, int dim = 2);
    static EmbeddingModel ssne(AffinityGraph p, double lambda = 1.0, int dim = 2);
    static EmbeddingModel tsne(AffinityGraph p, double lambda = 1.0, int dim = 2);

    ModelKind kind() const { return kind_; }
    KernelKind kernel() const { return kind_ == ModelKind::TSNE ? KernelKind::StudentT : KernelKind::Gaussian; }
    bool normalized() const { return kind_ != ModelKind::EE; }
    double lambda() const { return lambda_; }
    int dim() const { return dim_; }
    std::size_t size() const { return attractive_.order(); }

    const AffinityGraph& attractive() const { return attractive_; }
    const AffinityGraph& repulsive() const { return repulsive_; }

    /// Same model with a different lambda.
    EmbeddingModel with_lambda(double lambda) const;

private:
    EmbeddingModel(ModelKind kind, AffinityGraph attractive, AffinityGraph repulsive, double lambda, int dim);

    ModelKind kind_ = ModelKind::EE;
    AffinityGraph attractive_;
    AffinityGraph repulsive_;
    double lambda_ = 0.0;
    int dim_ = 2;
};

/// q_nm = K(|x_n - x_m|^2) / sum_{n' != m'} K(...), zero diagonal.
/// Throws DegenerateQ when the normalizer underflows to zero.
Matrix compute_q(const Embedding& x, KernelKind kernel);

struct ModelWeights {
    Matrix w;                    // gradient Laplacian weights w_nm
    std::optional<Matrix> wq;    // w^q_nm (normalized models)
    std::optional<Matrix> q;     // q_nm (normalized models)
    std::vector<Matrix> wxx;     // diagonal slices w^{xx}_{in,im}, i = 0..d-1 (on request)
};

/// Evaluates the model's weight matrices at x with the generic kernel formulas.
ModelWeights model_weights(const Embedding& x, const EmbeddingModel& model, bool with_xx = false);

/// E(X) = E+(X) + lambda E-(X).
double eval_error(const Embedding& x, const EmbeddingModel& model);

/// grad E = 4 X L(W).
Matrix eval_gradient(const Embedding& x, const EmbeddingModel& model);

/// Both at once, sharing the pairwise kernel evaluations.
struct ErrorAndGradient {
    double error;
    Matrix gradient;
};
ErrorAndGradient eval_error_and_gradient(const Embedding& x, const EmbeddingModel& model);

/**
 * L+ used by the spectral direction.  EE: Laplacian of W+.  s-SNE and t-SNE:
 * Laplacian of -K1(0) p_nm = p_nm, i.e. the attractive Hessian at X = 0.
 */
GraphLaplacian attractive_laplacian(const EmbeddingModel& model);

/// Nodes beyond which oracle_full_hessian refuses to assemble.
inline constexpr std::size_t kOracleMaxPoints = 200;

/**
 * Full Nd x Nd Hessian in point-major order: block (n, m) is d x d with
 * entries 4 l_nm delta_ij + 8 Lxx_ij[n, m], minus 16 lambda vec(X Lq) vec(X Lq)^T
 * for normalized models.  Throws OracleScaleExceeded for N > 200.
 */
Matrix oracle_full_hessian(const Embedding& x, const EmbeddingModel& model);

/// Diagonal of the full Hessian in the same d x N layout as X, in O(N^2 d).
Matrix hessian_diagonal(const Embedding& x, const EmbeddingModel& model);

} // namespace embedopt

#endif
