#ifndef EMBEDOPT_DRIVER_HPP
#define EMBEDOPT_DRIVER_HPP

#include "embedopt/affinity.hpp"
#include "embedopt/models.hpp"
#include "embedopt/optimize.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace embedopt {

/// Default scale of random initial embeddings.
inline constexpr double kInitScale = 1e-4;

/// Gaussian noise of the given scale, d x N, from a seeded generator.
Embedding random_init(std::size_t n, int dim, std::uint64_t seed, double scale = kInitScale);

struct SyntheticData {
    DataMatrix points;              // D x N
    std::vector<int> labels;
};

/**
 * Gaussian clusters: centers drawn with standard deviation `separation`,
 * points with unit standard deviation around them.  Points are assigned
 * to clusters round-robin.
 */
SyntheticData synthetic_clusters(std::size_t n, int input_dim, int clusters, std::uint64_t seed,
                                 double separation = 6.0);

struct HomotopySchedule {
    std::vector<double> lambdas;
    StopCriteria per_lambda;

    /// `steps` values spaced evenly in log between lo and hi, per-lambda
    /// rel_tol 1e-6 and at most 1e4 iterations.
    static HomotopySchedule log_spaced(double lo, double hi, int steps);

    /// Throws Error unless the lambdas are positive and strictly increasing.
    void validate() const;
};

struct LambdaStats {
    double lambda = 0.0;
    int iterations = 0;
    int fevals = 0;
    double seconds = 0.0;
    double final_error = 0.0;
    RunStatus status = RunStatus::MaxIters;
    double shift_norm = 0.0;        // ||X(lambda_i) - X(lambda_{i-1})||_F
};

struct HomotopyResult {
    Embedding x;
    std::vector<LambdaStats> stages;
};

/**
 * Minimizes along the schedule, warm-starting every stage from the previous
 * minimizer.  Each stage's line search restarts at a unit step.  Errors are
 * rethrown with the failing lambda in the message.
 */
HomotopyResult homotopy_run(const std::function<EmbeddingModel(double)>& model_at, const HomotopySchedule& schedule,
                            DirectionStrategy& strategy, const Embedding& x_init, const LineSearchConfig& cfg = {});

enum class BenchRegimeKind { SameStart, TimeBudget, FixedEndpoints };

struct BenchRegime {
    BenchRegimeKind kind = BenchRegimeKind::SameStart;
    double budget_s = 20.0;          // TimeBudget
    double perturbation = 1e-2;      // FixedEndpoints
    double endpoint_tol = 1e-6;      // FixedEndpoints: target is E(X_inf) + endpoint_tol
};

struct BenchRow {
    std::uint64_t seed = 0;
    std::string strategy;
    double final_error = 0.0;
    int iterations = 0;
    int fevals = 0;
    double seconds = 0.0;
    RunStatus status = RunStatus::MaxIters;
};

struct BenchAggregate {
    std::string strategy;
    double median_error = 0.0;
    double min_error = 0.0;
    double max_error = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;           // seed-major, strategies in the given order
    std::vector<OptTrace> traces;         // parallel to rows
    std::vector<BenchAggregate> aggregates;
    std::optional<double> endpoint_error; // FixedEndpoints: E(X_inf) of the last seed
};

/**
 * Races the strategies over `seeds` seeded initializations (seed values
 * base_seed, base_seed + 1, ...).  All strategies share each seed's X0.
 */
BenchReport bench_race(const EmbeddingModel& model, const std::vector<StrategyOptions>& strategies, int seeds,
                       const BenchRegime& regime, const StopCriteria& stop = {}, std::uint64_t base_seed = 0,
                       const LineSearchConfig& cfg = {});

} // namespace embedopt

#endif
