#include "embedopt/optimize.hpp"

#include "embedopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace embedopt {

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::GD: return "gd";
    case StrategyKind::FP: return "fp";
    case StrategyKind::DiagH: return "diagh";
    case StrategyKind::SD: return "sd";
    case StrategyKind::SDMinus: return "sdm";
    case StrategyKind::LBFGS: return "lbfgs";
    case StrategyKind::NCG: return "ncg";
    }
    return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
    for (StrategyKind k : {StrategyKind::GD, StrategyKind::FP, StrategyKind::DiagH, StrategyKind::SD,
                           StrategyKind::SDMinus, StrategyKind::LBFGS, StrategyKind::NCG}) {
        if (to_string(k) == name) return k;
    }
    throw Error("unknown optimizer '" + std::string(name) + "'");
}

double damping_for(const GraphLaplacian& lplus, const MuPolicy& policy) {
    double smallest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < lplus.degrees.size(); ++i) {
        const double d = lplus.degrees(i);
        if (d > 0.0) smallest = std::min(smallest, d);
    }
    if (!std::isfinite(smallest)) smallest = 1.0;
    return policy.scale * smallest;
}

namespace {

SymMatrix scaled(const SymMatrix& m, double factor) {
    if (m.is_sparse()) return SymMatrix(SparseMatrix(factor * m.sparse()));
    return SymMatrix(Matrix(factor * m.dense()));
}

SymMatrix diagonal_matrix(const Vector& diag) {
    const Eigen::Index n = diag.size();
    SparseMatrix s(n, n);
    s.reserve(Eigen::VectorXi::Constant(n, 1));
    for (Eigen::Index i = 0; i < n; ++i) s.insert(i, i) = diag(i);
    s.makeCompressed();
    return SymMatrix(std::move(s));
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

} // namespace

CholeskyFactor sd_prepare(const GraphLaplacian& lplus, std::size_t kappa, const MuPolicy& policy) {
    const std::size_t n = lplus.order();
    if (kappa > n) throw Error("sd_prepare: kappa exceeds the number of points");
    double mu = damping_for(lplus, policy);

    SymMatrix b;
    if (kappa == 0) {
        b = diagonal_matrix(4.0 * lplus.degrees);
    } else if (kappa + 1 >= n) {
        b = scaled(lplus.matrix, 4.0);
    } else {
        Matrix w = -lplus.matrix.to_dense();
        w.diagonal().setZero();
        w = w.cwiseMax(0.0);
        const AffinityGraph sparse = knn_sparsify(AffinityGraph(std::move(w), false), kappa);
        b = scaled(graph_laplacian(sparse).matrix, 4.0);
    }

    constexpr int kRetries = 3;
    for (int attempt = 0;; ++attempt) {
        try {
            return cholesky_factorize(b, mu);
        } catch (const NotPositiveDefinite&) {
            if (attempt == kRetries) throw;
            mu *= 10.0;
        }
    }
}

Matrix fixed_point_direction(const Matrix& g, const Vector& degrees, double mu) {
    if (g.cols() != degrees.size()) throw DimensionMismatch("fixed_point_direction: size mismatch");
    Vector scale(degrees.size());
    for (Eigen::Index n = 0; n < degrees.size(); ++n) {
        const double d = 4.0 * degrees(n);
        scale(n) = d > 0.0 ? 1.0 / d : 1.0 / mu;
    }
    return -(g * scale.asDiagonal());
}

Matrix fixed_point_split_form(const Embedding& x, const Matrix& w, const Vector& degrees) {
    const Matrix l = graph_laplacian(w).matrix.to_dense();
    Matrix split = x * (Matrix(degrees.asDiagonal()) - l);
    split = split * degrees.cwiseInverse().asDiagonal();
    return split - x;
}

Vector LbfgsMemory::direction(const Vector& x, const Vector& g) {
    if (prev_x_ && prev_x_->size() == x.size()) {
        Vector s = x - *prev_x_;
        Vector y = g - *prev_g_;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            s_.push_back(std::move(s));
            y_.push_back(std::move(y));
            rho_.push_back(1.0 / sy);
            if (static_cast<int>(s_.size()) > memory_) {
                s_.pop_front();
                y_.pop_front();
                rho_.pop_front();
            }
        }
    }
    prev_x_ = x;
    prev_g_ = g;

    const std::size_t k = s_.size();
    Vector q = g;
    std::vector<double> alpha(k);
    for (std::size_t i = k; i-- > 0;) {
        alpha[i] = rho_[i] * s_[i].dot(q);
        q -= alpha[i] * y_[i];
    }
    if (k > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
    for (std::size_t i = 0; i < k; ++i) {
        const double beta = rho_[i] * y_[i].dot(q);
        q += (alpha[i] - beta) * s_[i];
    }
    return -q;
}

void LbfgsMemory::reset() {
    s_.clear();
    y_.clear();
    rho_.clear();
    prev_x_.reset();
    prev_g_.reset();
}

Vector PolakRibiere::direction(const Vector& g) {
    Vector p = -g;
    const bool periodic = restart_every_ > 0 && since_restart_ >= restart_every_;
    if (prev_g_ && prev_p_ && !periodic && prev_g_->size() == g.size()) {
        const double denom = prev_g_->squaredNorm();
        const double beta = denom > 0.0 ? g.dot(g - *prev_g_) / denom : 0.0;
        if (beta > 0.0) {
            p += beta * *prev_p_;
            ++since_restart_;
        } else {
            since_restart_ = 0;
        }
    } else {
        since_restart_ = 0;
    }
    prev_g_ = g;
    return p;
}

void PolakRibiere::used(const Vector& p) { prev_p_ = p; }

void PolakRibiere::reset() {
    since_restart_ = 0;
    prev_g_.reset();
    prev_p_.reset();
}

void DirectionStrategy::prepare(const EmbeddingModel& /*model*/) {}

Matrix DirectionStrategy::direction(const Embedding& x, const Matrix& g, const EmbeddingModel& model) {
    if (g.rows() != x.rows() || g.cols() != x.cols()) throw DimensionMismatch("direction: gradient shape mismatch");
    if ((g.array() == 0.0).all()) {
        Matrix zero = Matrix::Zero(g.rows(), g.cols());
        used(zero);
        return zero;
    }
    Matrix p = compute(x, g, model);
    const double slope = (p.array() * g.array()).sum();
    if (!(slope < 0.0) || !p.allFinite()) {
        p = -g;
        ++fallbacks_;
    }
    used(p);
    return p;
}

namespace {

class GradientDescent final : public DirectionStrategy {
public:
    explicit GradientDescent(StrategyOptions o) : DirectionStrategy(std::move(o)) {}

protected:
    Matrix compute(const Embedding&, const Matrix& g, const EmbeddingModel&) override { return -g; }
};

class FixedPoint final : public DirectionStrategy {
public:
    explicit FixedPoint(StrategyOptions o) : DirectionStrategy(std::move(o)) {}

    void prepare(const EmbeddingModel& model) override {
        const GraphLaplacian lplus = attractive_laplacian(model);
        degrees_ = lplus.degrees;
        mu_ = damping_for(lplus, options_.mu);
    }

protected:
    Matrix compute(const Embedding&, const Matrix& g, const EmbeddingModel&) override {
        if (degrees_.size() != g.cols()) throw CacheMissing("fp: prepare() was not called for this model");
        return fixed_point_direction(g, degrees_, mu_);
    }

private:
    Vector degrees_;
    double mu_ = 0.0;
};

class DiagonalHessian final : public DirectionStrategy {
public:
    explicit DiagonalHessian(StrategyOptions o) : DirectionStrategy(std::move(o)) {}

protected:
    Matrix compute(const Embedding& x, const Matrix& g, const EmbeddingModel& model) override {
        const Matrix diag = hessian_diagonal(x, model);
        const double largest = diag.cwiseAbs().maxCoeff();
        if (!(largest > 0.0)) return -g;
        const double floor = 1e-10 * largest;
        return -(g.array() / diag.array().max(floor)).matrix();
    }
};

// Cache key for the attractive Laplacian: same kind family and same W+.
struct AttractiveKey {
    bool normalized = false;
    Matrix weights;

    bool matches(const EmbeddingModel& model) const {
        return normalized == model.normalized() && weights.rows() == model.attractive().weights().rows() &&
               weights == model.attractive().weights();
    }
};

class SpectralDirection final : public DirectionStrategy {
public:
    explicit SpectralDirection(StrategyOptions o) : DirectionStrategy(std::move(o)) {}

    void prepare(const EmbeddingModel& model) override {
        if (factor_.valid() && key_.matches(model)) return;
        const GraphLaplacian lplus = attractive_laplacian(model);
        factor_ = sd_prepare(lplus, kappa(model.size()), options_.mu);
        key_ = {model.normalized(), model.attractive().weights()};
    }

    void reset() override { directions_ = 0; }

    const CholeskyFactor& factor() const { return factor_; }

protected:
    Matrix compute(const Embedding& x, const Matrix& g, const EmbeddingModel& model) override {
        if (!factor_.valid()) throw CacheMissing("sd: direction requested before sd_prepare");
        const int every = options_.refresh_every;
        if (every > 0 && model.kind() == ModelKind::TSNE && directions_ > 0 && directions_ % every == 0) {
            refresh(x, model);
        }
        ++directions_;
        return solve_via_factor(factor_, g);
    }

private:
    std::size_t kappa(std::size_t n) const { return options_.kappa ? std::min(*options_.kappa, n) : n; }

    // Attractive Hessian of t-SNE at the current X: weights -K1 p = K p.
    void refresh(const Embedding& x, const EmbeddingModel& model) {
        const Eigen::Index n = x.cols();
        Matrix w = model.attractive().weights();
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = m + 1; j < n; ++j) {
                const double k = kernel_eval(KernelKind::StudentT, (x.col(m) - x.col(j)).squaredNorm()).k;
                w(m, j) *= k;
                w(j, m) = w(m, j);
            }
        }
        factor_ = sd_prepare(graph_laplacian(w), kappa(model.size()), options_.mu);
    }

    CholeskyFactor factor_;
    AttractiveKey key_;
    int directions_ = 0;
};

class PartialHessianCg final : public DirectionStrategy {
public:
    explicit PartialHessianCg(StrategyOptions o) : DirectionStrategy(std::move(o)) {}

    void prepare(const EmbeddingModel& model) override {
        if (lplus_ && key_.matches(model)) return;
        lplus_ = attractive_laplacian(model);
        mu_ = damping_for(*lplus_, options_.mu);
        key_ = {model.normalized(), model.attractive().weights()};
    }

    void reset() override { warm_.reset(); }

protected:
    Matrix compute(const Embedding& x, const Matrix& g, const EmbeddingModel& model) override {
        if (!lplus_) throw CacheMissing("sdm: prepare() was not called");
        const Eigen::Index d = x.rows();
        const Eigen::Index n = x.cols();
        ModelWeights weights = model_weights(x, model, true);
        std::vector<Vector> degrees;
        for (Matrix& slice : weights.wxx) {
            slice = slice.cwiseMax(0.0);
            degrees.push_back(slice.rowwise().sum());
        }
        const GraphLaplacian& lplus = *lplus_;
        const double mu = mu_;
        const LinearOperator apply = [&](const Vector& v) {
            const Matrix vm = unflatten(v, d, n);
            Matrix out = 4.0 * lplus.matrix.multiply(vm.transpose()).transpose();
            for (Eigen::Index i = 0; i < d; ++i) {
                const Vector row = vm.row(i).transpose();
                const Vector lxx = degrees[static_cast<std::size_t>(i)].cwiseProduct(row) -
                                   weights.wxx[static_cast<std::size_t>(i)] * row;
                out.row(i) += 8.0 * lxx.transpose();
            }
            out += mu * vm;
            return flatten(out);
        };
        const Vector b = -flatten(g);
        // Scale the previous solution along itself to minimize the CG quadratic.
        // Its value then starts at or below zero and every iterate is a descent direction.
        Vector x0 = Vector::Zero(b.size());
        if (warm_ && warm_->size() == b.size()) {
            const double bx = b.dot(*warm_);
            const double xbx = warm_->dot(apply(*warm_));
            if (bx > 0.0 && xbx > 0.0) x0 = (bx / xbx) * *warm_;
        }
        try {
            LinearCgResult result = linear_cg(apply, b, x0, options_.cg_tol, options_.cg_max);
            warm_ = result.x;
            return unflatten(result.x, d, n);
        } catch (const BreakdownNonPSD&) {
            warm_.reset();
            return -g;
        }
    }

private:
    std::optional<GraphLaplacian> lplus_;
    double mu_ = 0.0;
    AttractiveKey key_;
    std::optional<Vector> warm_;
};

class Lbfgs final : public DirectionStrategy {
public:
    explicit Lbfgs(StrategyOptions o) : DirectionStrategy(o), memory_(o.lbfgs_memory) {}

    void reset() override { memory_.reset(); }

protected:
    Matrix compute(const Embedding& x, const Matrix& g, const EmbeddingModel&) override {
        return unflatten(memory_.direction(flatten(x), flatten(g)), g.rows(), g.cols());
    }

private:
    LbfgsMemory memory_;
};

class NonlinearCg final : public DirectionStrategy {
public:
    explicit NonlinearCg(StrategyOptions o) : DirectionStrategy(std::move(o)), cg_(0) {}

    void prepare(const EmbeddingModel& model) override {
        cg_ = PolakRibiere(model.size() * static_cast<std::size_t>(model.dim()));
    }
    void reset() override { cg_.reset(); }

protected:
    Matrix compute(const Embedding&, const Matrix& g, const EmbeddingModel&) override {
        return unflatten(cg_.direction(flatten(g)), g.rows(), g.cols());
    }
    void used(const Matrix& p) override { cg_.used(flatten(p)); }

private:
    PolakRibiere cg_;
};

} // namespace

std::unique_ptr<DirectionStrategy> DirectionStrategy::create(const StrategyOptions& options) {
    if (options.lbfgs_memory < 1) throw Error("lbfgs memory must be >= 1");
    if (!(options.cg_tol > 0.0) || options.cg_max < 1) throw Error("sdm: cg_tol must be > 0 and cg_max >= 1");
    if (!(options.mu.scale > 0.0)) throw Error("mu scale must be positive");
    switch (options.kind) {
    case StrategyKind::GD: return std::make_unique<GradientDescent>(options);
    case StrategyKind::FP: return std::make_unique<FixedPoint>(options);
    case StrategyKind::DiagH: return std::make_unique<DiagonalHessian>(options);
    case StrategyKind::SD: return std::make_unique<SpectralDirection>(options);
    case StrategyKind::SDMinus: return std::make_unique<PartialHessianCg>(options);
    case StrategyKind::LBFGS: return std::make_unique<Lbfgs>(options);
    case StrategyKind::NCG: return std::make_unique<NonlinearCg>(options);
    }
    throw Error("unknown strategy kind");
}

} // namespace embedopt
