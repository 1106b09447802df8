#include "embedopt/errors.hpp"
#include "embedopt/optimize.hpp"

#include <chrono>
#include <cmath>
#include <deque>

namespace embedopt {

std::string_view to_string(RunStatus status) {
    switch (status) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::TimeBudget: return "TimeBudget";
    case RunStatus::LineSearchFailed: return "LineSearchFailed";
    case RunStatus::DegenerateQ: return "DegenerateQ";
    }
    return "Unknown";
}

int OptTrace::total_fevals() const {
    int total = 0;
    for (const auto& r : records) total += r.fevals;
    return total;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double inf_norm(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// exp(slope) of the least-squares fit of log ||x_k - x_final|| against k.
std::optional<double> estimate_rate(const std::deque<Embedding>& recent) {
    if (recent.size() < 2) return std::nullopt;
    const Embedding& last = recent.back();
    std::vector<double> ks;
    std::vector<double> logs;
    for (std::size_t k = 0; k + 1 < recent.size(); ++k) {
        const double dist = (recent[k] - last).norm();
        if (dist > 0.0) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(std::log(dist));
        }
    }
    if (ks.size() < 2) return std::nullopt;
    const double n = static_cast<double>(ks.size());
    double mk = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        mk += ks[i];
        ml += logs[i];
    }
    mk /= n;
    ml /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - mk) * (logs[i] - ml);
        sxx += (ks[i] - mk) * (ks[i] - mk);
    }
    return std::exp(sxy / sxx);
}

} // namespace

MinimizeResult minimize(const Embedding& x0, const EmbeddingModel& model, DirectionStrategy& strategy,
                        const StopCriteria& stop, const LineSearchConfig& cfg, double alpha_init) {
    if (!x0.allFinite()) throw Error("minimize: initial embedding has non-finite entries");
    const auto start = Clock::now();
    strategy.prepare(model);
    strategy.reset();

    MinimizeResult out;
    out.x = x0;
    OptTrace& trace = out.trace;
    trace.setup_seconds = seconds_since(start);

    Matrix g;
    double error = 0.0;
    try {
        ErrorAndGradient eg = eval_error_and_gradient(out.x, model);
        error = eg.error;
        g = std::move(eg.gradient);
    } catch (const DegenerateQ&) {
        trace.status = RunStatus::DegenerateQ;
        return out;
    }
    trace.initial_error = error;
    trace.initial_grad_inf = inf_norm(g);
    if (!std::isfinite(error) || !std::isfinite(trace.initial_grad_inf)) {
        throw NumericalError("error or gradient is not finite at the initial embedding");
    }
    const double grad_tol = stop.grad_tol.value_or(1e-6 * trace.initial_grad_inf);

    if (trace.initial_grad_inf == 0.0 || trace.initial_grad_inf <= grad_tol ||
        (stop.target_error && error <= *stop.target_error)) {
        trace.status = RunStatus::Converged;
        return out;
    }

    const ErrorFunction f = [&model](const Embedding& x) {
        try {
            return eval_error(x, model);
        } catch (const DegenerateQ&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    constexpr std::size_t kRateWindow = 11;   // the last 10 iterates plus the final one
    std::deque<Embedding> recent;
    double alpha_prev = alpha_init;
    bool finished = false;

    for (int k = 1; k <= stop.max_iters && !finished; ++k) {
        if (seconds_since(start) >= stop.time_budget_s) {
            trace.status = RunStatus::TimeBudget;
            finished = true;
            break;
        }
        IterationRecord rec;
        rec.iter = k;

        const int fallbacks_before = strategy.fallback_count();
        auto t0 = Clock::now();
        const Matrix p = strategy.direction(out.x, g, model);
        rec.direction_seconds = seconds_since(t0);
        rec.slope = (p.array() * g.array()).sum();
        rec.fallback = strategy.fallback_count() != fallbacks_before;
        if (!(rec.slope < 0.0)) {
            trace.status = RunStatus::Converged;
            break;
        }

        const double a0 = k == 1 || !cfg.adaptive_init ? alpha_init : alpha_prev;
        LineSearchResult ls;
        try {
            ls = line_search(f, out.x, error, p, g, a0, cfg);
        } catch (const LineSearchFailed&) {
            trace.status = RunStatus::LineSearchFailed;
            break;
        }
        out.x += ls.alpha * p;
        alpha_prev = ls.alpha;

        t0 = Clock::now();
        try {
            g = eval_gradient(out.x, model);
        } catch (const DegenerateQ&) {
            trace.status = RunStatus::DegenerateQ;
            finished = true;
        }
        rec.gradient_seconds = seconds_since(t0);

        const double previous = error;
        error = ls.error;
        rec.error = error;
        rec.grad_inf = finished ? std::numeric_limits<double>::quiet_NaN() : inf_norm(g);
        rec.step = ls.alpha;
        rec.fevals = ls.evals;
        rec.seconds = seconds_since(start);
        trace.records.push_back(rec);

        recent.push_back(out.x);
        if (recent.size() > kRateWindow) recent.pop_front();

        if (finished) break;
        if (rec.grad_inf <= grad_tol || (stop.target_error && error <= *stop.target_error) ||
            (previous - error) / std::max(1.0, std::abs(error)) <= stop.rel_tol) {
            trace.status = RunStatus::Converged;
            finished = true;
        } else if (rec.seconds >= stop.time_budget_s) {
            trace.status = RunStatus::TimeBudget;
            finished = true;
        }
    }
    if (!finished && trace.status != RunStatus::Converged && trace.status != RunStatus::LineSearchFailed) {
        trace.status = RunStatus::MaxIters;
    }
    if (trace.records.size() >= 12 && recent.size() == kRateWindow) trace.rate = estimate_rate(recent);
    return out;
}

} // namespace embedopt
