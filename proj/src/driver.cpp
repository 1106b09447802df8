#include "embedopt/driver.hpp"

#include "embedopt/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace embedopt {

Embedding random_init(std::size_t n, int dim, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Embedding x(dim, static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = scale * normal(rng);
    }
    return x;
}

SyntheticData synthetic_clusters(std::size_t n, int input_dim, int clusters, std::uint64_t seed, double separation) {
    if (clusters < 1 || input_dim < 1) throw Error("synthetic_clusters: need clusters >= 1 and input_dim >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix centers(input_dim, clusters);
    for (Eigen::Index c = 0; c < centers.cols(); ++c) {
        for (Eigen::Index i = 0; i < centers.rows(); ++i) centers(i, c) = separation * normal(rng);
    }
    SyntheticData out;
    out.points.resize(input_dim, static_cast<Eigen::Index>(n));
    out.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const int label = static_cast<int>(j % static_cast<std::size_t>(clusters));
        out.labels[j] = label;
        for (Eigen::Index i = 0; i < input_dim; ++i) {
            out.points(i, static_cast<Eigen::Index>(j)) = centers(i, label) + normal(rng);
        }
    }
    return out;
}

HomotopySchedule HomotopySchedule::log_spaced(double lo, double hi, int steps) {
    if (!(lo > 0.0) || !(hi >= lo) || steps < 1) throw Error("homotopy: need 0 < lo <= hi and steps >= 1");
    HomotopySchedule s;
    if (steps == 1) {
        s.lambdas = {hi};
    } else {
        const double a = std::log10(lo);
        const double b = std::log10(hi);
        for (int i = 0; i < steps; ++i) {
            s.lambdas.push_back(std::pow(10.0, a + (b - a) * i / (steps - 1)));
        }
    }
    s.per_lambda.rel_tol = 1e-6;
    s.per_lambda.max_iters = 10000;
    s.validate();
    return s;
}

void HomotopySchedule::validate() const {
    if (lambdas.empty()) throw Error("homotopy: schedule is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) throw Error("homotopy: lambdas must be positive");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw Error("homotopy: lambdas must increase strictly");
    }
}

HomotopyResult homotopy_run(const std::function<EmbeddingModel(double)>& model_at, const HomotopySchedule& schedule,
                            DirectionStrategy& strategy, const Embedding& x_init, const LineSearchConfig& cfg) {
    schedule.validate();
    HomotopyResult out;
    out.x = x_init;
    for (const double lambda : schedule.lambdas) {
        MinimizeResult stage;
        try {
            const EmbeddingModel model = model_at(lambda);
            stage = minimize(out.x, model, strategy, schedule.per_lambda, cfg, 1.0);
        } catch (const NumericalError& e) {
            std::ostringstream msg;
            msg << "homotopy failed at lambda = " << lambda << ": " << e.what();
            throw NumericalError(msg.str());
        }
        if (stage.trace.status == RunStatus::DegenerateQ) {
            std::ostringstream msg;
            msg << "homotopy failed at lambda = " << lambda << ": degenerate kernel normalizer";
            throw DegenerateQ(msg.str());
        }
        LambdaStats stats;
        stats.lambda = lambda;
        stats.iterations = stage.trace.iterations();
        stats.fevals = stage.trace.total_fevals();
        stats.seconds = stage.trace.seconds();
        stats.final_error = stage.trace.final_error();
        stats.status = stage.trace.status;
        stats.shift_norm = (stage.x - out.x).norm();
        out.stages.push_back(stats);
        out.x = std::move(stage.x);
    }
    return out;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Distinct stream for endpoint perturbations so they never coincide with X0 draws.
constexpr std::uint64_t kPerturbationSalt = 0x9e3779b97f4a7c15ULL;

} // namespace

BenchReport bench_race(const EmbeddingModel& model, const std::vector<StrategyOptions>& strategies, int seeds,
                       const BenchRegime& regime, const StopCriteria& stop, std::uint64_t base_seed,
                       const LineSearchConfig& cfg) {
    if (strategies.empty()) throw Error("bench: no strategies given");
    if (seeds < 1) throw Error("bench: need at least one seed");

    std::vector<std::unique_ptr<DirectionStrategy>> runners;
    for (const auto& opts : strategies) runners.push_back(DirectionStrategy::create(opts));

    BenchReport report;
    for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
        Embedding x0 = random_init(model.size(), model.dim(), seed);
        StopCriteria run_stop = stop;

        if (regime.kind == BenchRegimeKind::TimeBudget) {
            run_stop.time_budget_s = regime.budget_s;
        } else if (regime.kind == BenchRegimeKind::FixedEndpoints) {
            StrategyOptions sd_opts;
            sd_opts.kind = StrategyKind::SD;
            auto sd = DirectionStrategy::create(sd_opts);
            StopCriteria tight;
            tight.rel_tol = 1e-14;
            tight.max_iters = 10000;
            const MinimizeResult endpoint = minimize(x0, model, *sd, tight, cfg);
            const double e_inf = endpoint.trace.final_error();
            report.endpoint_error = e_inf;
            x0 = endpoint.x + random_init(model.size(), model.dim(), seed ^ kPerturbationSalt, regime.perturbation);
            run_stop.target_error = e_inf + regime.endpoint_tol;
            run_stop.rel_tol = 0.0;
        }

        for (std::size_t k = 0; k < runners.size(); ++k) {
            const MinimizeResult run = minimize(x0, model, *runners[k], run_stop, cfg);
            BenchRow row;
            row.seed = seed;
            row.strategy = std::string(to_string(strategies[k].kind));
            row.final_error = run.trace.final_error();
            row.iterations = run.trace.iterations();
            row.fevals = run.trace.total_fevals();
            row.seconds = run.trace.seconds();
            row.status = run.trace.status;
            report.rows.push_back(row);
            report.traces.push_back(run.trace);
        }
    }

    for (const auto& opts : strategies) {
        const std::string name(to_string(opts.kind));
        std::vector<double> errors;
        for (const auto& row : report.rows) {
            if (row.strategy == name) errors.push_back(row.final_error);
        }
        if (errors.empty()) continue;
        bool seen = false;
        for (const auto& a : report.aggregates) seen = seen || a.strategy == name;
        if (seen) continue;
        report.aggregates.push_back(
            {name, median(errors), *std::min_element(errors.begin(), errors.end()),
             *std::max_element(errors.begin(), errors.end())});
    }
    return report;
}

} // namespace embedopt
