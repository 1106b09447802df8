#ifndef EMBEDOPT_OPTIMIZE_HPP
#define EMBEDOPT_OPTIMIZE_HPP

#include "embedopt/affinity.hpp"
#include "embedopt/linalg.hpp"
#include "embedopt/models.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace embedopt {

enum class StrategyKind { GD, FP, DiagH, SD, SDMinus, LBFGS, NCG };

std::string_view to_string(StrategyKind kind);
/// Accepts the CLI spellings gd, fp, diagh, sd, sdm, lbfgs, ncg.
StrategyKind parse_strategy(std::string_view name);

/// mu = scale * (smallest positive degree of L+); always > 0.
struct MuPolicy {
    double scale = 1e-10;
};

double damping_for(const GraphLaplacian& lplus, const MuPolicy& policy);

struct StrategyOptions {
    StrategyKind kind = StrategyKind::SD;
    std::optional<std::size_t> kappa;   // SD sparsification; unset means N
    MuPolicy mu;
    int lbfgs_memory = 100;
    double cg_tol = 0.1;                // SD- inner solve
    int cg_max = 50;
    int refresh_every = 0;              // SD: rebuild the factor every T directions (t-SNE only); 0 = never
};

/**
 * Factor of B = 4 Laplacian(knn_sparsify(W+, kappa)) + mu I, with W+ read off
 * the off-diagonal of lplus.  kappa = 0 uses the diagonal 4 D+ of the
 * unsparsified graph.  NotPositiveDefinite triggers up to three retries with
 * mu multiplied by 10.
 */
CholeskyFactor sd_prepare(const GraphLaplacian& lplus, std::size_t kappa, const MuPolicy& policy = {});

/// Fixed-point diagonal direction -g (4 D+)^{-1}; zero degrees fall back to mu.
Matrix fixed_point_direction(const Matrix& g, const Vector& degrees, double mu);

/// The split form X (D+ - L)(D+)^{-1} - X with L the Laplacian of weights w.
Matrix fixed_point_split_form(const Embedding& x, const Matrix& w, const Vector& degrees);

/// Limited-memory BFGS inverse-Hessian estimate (two-loop recursion).
class LbfgsMemory {
public:
    explicit LbfgsMemory(int memory) : memory_(memory) {}

    /// Updates the pair history with (x - x_prev, g - g_prev) and returns -H g.
    Vector direction(const Vector& x, const Vector& g);
    void reset();
    std::size_t pairs() const { return s_.size(); }

private:
    int memory_;
    std::deque<Vector> s_;
    std::deque<Vector> y_;
    std::deque<double> rho_;
    std::optional<Vector> prev_x_;
    std::optional<Vector> prev_g_;
};

/// Polak-Ribiere+ nonlinear conjugate gradient directions.
class PolakRibiere {
public:
    /// restart_every = 0 disables the periodic restart.
    explicit PolakRibiere(std::size_t restart_every) : restart_every_(restart_every) {}

    Vector direction(const Vector& g);
    /// Records the direction actually taken (it may have been reset to -g).
    void used(const Vector& p);
    void reset();

private:
    std::size_t restart_every_;
    std::size_t since_restart_ = 0;
    std::optional<Vector> prev_g_;
    std::optional<Vector> prev_p_;
};

/**
 * A search-direction rule with its cached state.
 *
 * direction() always returns a descent direction for g != 0: when the rule
 * produces P with <P, g> >= 0 it is replaced by -g for that iteration.
 */
class DirectionStrategy {
public:
    static std::unique_ptr<DirectionStrategy> create(const StrategyOptions& options);

    virtual ~DirectionStrategy() = default;

    StrategyKind kind() const { return options_.kind; }
    const StrategyOptions& options() const { return options_; }

    /// Builds model-dependent caches (the SD factor).  Cheap when repeated
    /// for a model with the same attractive graph.
    virtual void prepare(const EmbeddingModel& model);
    /// Drops per-run history (L-BFGS pairs, CG state, warm starts).
    virtual void reset() {}

    Matrix direction(const Embedding& x, const Matrix& g, const EmbeddingModel& model);

    /// Iterations where the reset-to-steepest-descent rule fired.
    int fallback_count() const { return fallbacks_; }

protected:
    explicit DirectionStrategy(StrategyOptions options) : options_(std::move(options)) {}

    virtual Matrix compute(const Embedding& x, const Matrix& g, const EmbeddingModel& model) = 0;
    virtual void used(const Matrix& /*p*/) {}

    StrategyOptions options_;

private:
    int fallbacks_ = 0;
};

struct LineSearchConfig {
    double c1 = 1e-4;
    double rho = 0.5;
    int max_tries = 60;
    bool adaptive_init = true;
};

struct LineSearchResult {
    double alpha = 0.0;
    double error = 0.0;
    int evals = 0;
};

using ErrorFunction = std::function<double(const Embedding&)>;

/**
 * Backtracking on the sufficient-decrease condition
 * E(X + a P) <= E(X) + c1 a <P, g>, trying a = alpha_init rho^i for
 * i = 0..max_tries.  A trial must also strictly decrease E.  Throws
 * LineSearchFailed when no trial is accepted.
 */
LineSearchResult line_search(const ErrorFunction& f, const Embedding& x, double error, const Matrix& p,
                             const Matrix& g, double alpha_init, const LineSearchConfig& cfg = {});

struct StopCriteria {
    std::optional<double> grad_tol;    // on ||g||_inf; default 1e-6 ||g0||_inf
    double rel_tol = 1e-8;
    int max_iters = 10000;
    double time_budget_s = std::numeric_limits<double>::infinity();
    std::optional<double> target_error;  // stop once E <= target
};

enum class RunStatus { Converged, MaxIters, TimeBudget, LineSearchFailed, DegenerateQ };

std::string_view to_string(RunStatus status);

struct IterationRecord {
    int iter = 0;
    double error = 0.0;
    double grad_inf = 0.0;
    double step = 0.0;
    int fevals = 0;
    double seconds = 0.0;            // cumulative, including setup
    double slope = 0.0;              // <P, g> of the direction used
    bool fallback = false;           // direction was reset to -g
    double direction_seconds = 0.0;
    double gradient_seconds = 0.0;
};

struct OptTrace {
    double initial_error = 0.0;
    double initial_grad_inf = 0.0;
    double setup_seconds = 0.0;
    std::vector<IterationRecord> records;
    RunStatus status = RunStatus::MaxIters;
    /// Estimated linear rate: exp of the least-squares slope of
    /// log ||x_k - x_final|| over the last 10 iterations (needs >= 12).
    std::optional<double> rate;

    int iterations() const { return static_cast<int>(records.size()); }
    double final_error() const { return records.empty() ? initial_error : records.back().error; }
    int total_fevals() const;
    double seconds() const { return records.empty() ? setup_seconds : records.back().seconds; }
};

struct MinimizeResult {
    Embedding x;
    OptTrace trace;
};

/**
 * Descent loop x_{k+1} = x_k + a_k p_k.  Calls strategy.prepare(model) and
 * strategy.reset() first.  The first line search starts at alpha_init; later
 * ones start at the previous accepted step when cfg.adaptive_init is set.
 */
MinimizeResult minimize(const Embedding& x0, const EmbeddingModel& model, DirectionStrategy& strategy,
                        const StopCriteria& stop = {}, const LineSearchConfig& cfg = {}, double alpha_init = 1.0);

} // namespace embedopt

#endif
