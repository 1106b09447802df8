#include "embedopt/cli.hpp"

#include "embedopt/affinity.hpp"
#include "embedopt/driver.hpp"
#include "embedopt/errors.hpp"
#include "embedopt/io.hpp"
#include "embedopt/models.hpp"
#include "embedopt/optimize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace embedopt {

namespace {

struct InputOptions {
    std::string model = "ee";
    std::string data;
    std::string affinities;
    double perplexity = 20.0;
    std::optional<double> lambda;
    int dim = 2;
    std::uint64_t seed = 0;
    std::optional<std::size_t> knn;
    int lbfgs_m = 100;
};

struct UsageError : Error {
    using Error::Error;
};

void add_input_options(CLI::App& app, InputOptions& in) {
    app.add_option("--model", in.model, "Embedding model")->check(CLI::IsMember({"ee", "ssne", "tsne"}));
    auto* data = app.add_option("--data", in.data, "Input points, one per line");
    auto* aff = app.add_option("--affinities", in.affinities, "Precomputed affinity file");
    data->excludes(aff);
    app.add_option("--perplexity", in.perplexity, "Perplexity of the SNE affinities")->check(CLI::PositiveNumber);
    app.add_option("--lambda", in.lambda, "Repulsion weight (default: 100 for ee, 1 otherwise)");
    app.add_option("--dim", in.dim, "Embedding dimension")->check(CLI::PositiveNumber);
    app.add_option("--seed", in.seed, "Seed for the random initialization");
    app.add_option("--knn", in.knn, "Neighbors kept in the spectral direction's Laplacian (default N)");
    app.add_option("--lbfgs-m", in.lbfgs_m, "L-BFGS memory")->check(CLI::PositiveNumber);
}

AffinityGraph load_attractive(const InputOptions& in) {
    if (in.data.empty() == in.affinities.empty()) throw UsageError("exactly one of --data or --affinities is required");
    if (!in.affinities.empty()) return read_affinity_file(in.affinities);
    const DataMatrix y = read_data_matrix(in.data);
    if (!(in.perplexity > 1.0) || !(in.perplexity < static_cast<double>(y.cols()))) {
        throw UsageError("--perplexity must lie in (1, N)");
    }
    return sne_affinities(y, in.perplexity);
}

EmbeddingModel build_model(const InputOptions& in, const AffinityGraph& p) {
    if (in.model == "ee") {
        return EmbeddingModel::elastic(p, complete_graph(p.order()), in.lambda.value_or(100.0), in.dim);
    }
    if (!p.normalized()) throw UsageError("--model " + in.model + " needs normalized affinities");
    if (in.model == "ssne") return EmbeddingModel::ssne(p, in.lambda.value_or(1.0), in.dim);
    return EmbeddingModel::tsne(p, in.lambda.value_or(1.0), in.dim);
}

StrategyOptions strategy_options(const InputOptions& in, StrategyKind kind, std::size_t n) {
    StrategyOptions opts;
    opts.kind = kind;
    if (in.knn) {
        if (*in.knn > n) throw UsageError("--knn exceeds the number of points");
        opts.kappa = in.knn;
    }
    opts.lbfgs_memory = in.lbfgs_m;
    return opts;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool numerical_status(RunStatus s) { return s == RunStatus::LineSearchFailed || s == RunStatus::DegenerateQ; }

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonlinear embedding optimizers with partial-Hessian search directions"};
    app.require_subcommand(1);

    InputOptions embed_in;
    std::string embed_optimizer = "sd";
    StopCriteria embed_stop;
    std::optional<double> embed_grad_tol;
    std::string embed_out;
    std::string embed_trace;
    auto* embed = app.add_subcommand("embed", "Minimize one embedding objective");
    add_input_options(*embed, embed_in);
    embed->add_option("--optimizer", embed_optimizer, "Search direction")
        ->check(CLI::IsMember({"gd", "fp", "diagh", "ncg", "lbfgs", "sd", "sdm"}));
    embed->add_option("--max-iters", embed_stop.max_iters)->check(CLI::NonNegativeNumber);
    embed->add_option("--grad-tol", embed_grad_tol, "Absolute tolerance on the gradient inf-norm");
    embed->add_option("--rel-tol", embed_stop.rel_tol);
    embed->add_option("--time-budget-s", embed_stop.time_budget_s);
    embed->add_option("--out", embed_out, "Embedding CSV");
    embed->add_option("--trace", embed_trace, "Trace CSV");

    InputOptions homo_in;
    std::string homo_optimizer = "sd";
    double lambda_min = 1e-4;
    double lambda_max = 1e2;
    int steps = 50;
    double homo_rel_tol = 1e-6;
    int homo_max_iters = 10000;
    std::string homo_out;
    std::string homo_stats;
    auto* homotopy = app.add_subcommand("homotopy", "Follow the minimizer path over log-spaced lambdas");
    add_input_options(*homotopy, homo_in);
    homotopy->add_option("--optimizer", homo_optimizer)
        ->check(CLI::IsMember({"gd", "fp", "diagh", "ncg", "lbfgs", "sd", "sdm"}));
    homotopy->add_option("--lambda-min", lambda_min)->check(CLI::PositiveNumber);
    homotopy->add_option("--lambda-max", lambda_max)->check(CLI::PositiveNumber);
    homotopy->add_option("--steps", steps)->check(CLI::PositiveNumber);
    homotopy->add_option("--rel-tol", homo_rel_tol);
    homotopy->add_option("--max-iters", homo_max_iters)->check(CLI::NonNegativeNumber);
    homotopy->add_option("--out", homo_out, "Final embedding CSV");
    homotopy->add_option("--stats", homo_stats, "Per-lambda statistics CSV (default: stdout)");

    InputOptions bench_in;
    std::string bench_strategies = "gd,fp,sd,lbfgs";
    int bench_seeds = 10;
    std::optional<double> budget_s;
    std::string regime_name;
    int bench_max_iters = 10000;
    std::string bench_out;
    std::string bench_traces;
    auto* bench = app.add_subcommand("bench", "Race several strategies over seeded initializations");
    add_input_options(*bench, bench_in);
    bench->add_option("--strategies", bench_strategies, "Comma-separated optimizers");
    bench->add_option("--seeds", bench_seeds)->check(CLI::PositiveNumber);
    bench->add_option("--budget-s", budget_s, "Wall-clock budget per run");
    bench->add_option("--regime", regime_name, "same | budget | fixed (default: budget when --budget-s is given)")
        ->check(CLI::IsMember({"same", "budget", "fixed"}));
    bench->add_option("--max-iters", bench_max_iters)->check(CLI::NonNegativeNumber);
    bench->add_option("--out", bench_out, "Report CSV (default: stdout)");
    bench->add_option("--traces", bench_traces, "Directory for per-run trace CSVs");

    std::size_t synth_n = 1000;
    int synth_dim = 10;
    int synth_clusters = 10;
    std::uint64_t synth_seed = 0;
    double synth_sep = 6.0;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Write a Gaussian-cluster data set");
    synth->add_option("--n", synth_n)->check(CLI::PositiveNumber);
    synth->add_option("--input-dim", synth_dim)->check(CLI::PositiveNumber);
    synth->add_option("--clusters", synth_clusters)->check(CLI::PositiveNumber);
    synth->add_option("--separation", synth_sep)->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed);
    synth->add_option("--out", synth_out)->required();

    std::vector<std::string> reversed(args.size() > 0 ? args.begin() + 1 : args.begin(), args.end());
    std::reverse(reversed.begin(), reversed.end());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (embed->parsed()) {
            const AffinityGraph p = load_attractive(embed_in);
            const EmbeddingModel model = build_model(embed_in, p);
            const auto strategy =
                DirectionStrategy::create(strategy_options(embed_in, parse_strategy(embed_optimizer), p.order()));
            if (embed_grad_tol) embed_stop.grad_tol = *embed_grad_tol;
            const Embedding x0 = random_init(model.size(), model.dim(), embed_in.seed);
            const MinimizeResult result = minimize(x0, model, *strategy, embed_stop);
            if (!embed_out.empty()) write_embedding_csv(embed_out, result.x);
            if (!embed_trace.empty()) write_trace_csv(embed_trace, result.trace);
            out << "status=" << to_string(result.trace.status) << " iters=" << result.trace.iterations()
                << " error=" << format_double(result.trace.final_error()) << '\n';
            return numerical_status(result.trace.status) ? kExitNumerical : kExitOk;
        }
        if (homotopy->parsed()) {
            if (!(lambda_max >= lambda_min)) throw UsageError("--lambda-max must be >= --lambda-min");
            const AffinityGraph p = load_attractive(homo_in);
            const EmbeddingModel base = build_model(homo_in, p);
            const auto strategy =
                DirectionStrategy::create(strategy_options(homo_in, parse_strategy(homo_optimizer), p.order()));
            HomotopySchedule schedule = HomotopySchedule::log_spaced(lambda_min, lambda_max, steps);
            schedule.per_lambda.rel_tol = homo_rel_tol;
            schedule.per_lambda.max_iters = homo_max_iters;
            const Embedding x0 = random_init(base.size(), base.dim(), homo_in.seed);
            const HomotopyResult result = homotopy_run(
                [&base](double lambda) { return base.with_lambda(lambda); }, schedule, *strategy, x0);
            if (!homo_out.empty()) write_embedding_csv(homo_out, result.x);
            if (homo_stats.empty()) {
                write_homotopy_csv(out, result.stages);
            } else {
                write_homotopy_csv(homo_stats, result.stages);
            }
            return kExitOk;
        }
        if (bench->parsed()) {
            const AffinityGraph p = load_attractive(bench_in);
            const EmbeddingModel model = build_model(bench_in, p);
            std::vector<StrategyOptions> strategies;
            for (const auto& name : split_list(bench_strategies)) {
                strategies.push_back(strategy_options(bench_in, parse_strategy(name), p.order()));
            }
            if (strategies.empty()) throw UsageError("--strategies is empty");
            BenchRegime regime;
            if (regime_name.empty()) regime_name = budget_s ? "budget" : "same";
            if (regime_name == "budget") {
                regime.kind = BenchRegimeKind::TimeBudget;
                regime.budget_s = budget_s.value_or(20.0);
            } else if (regime_name == "fixed") {
                regime.kind = BenchRegimeKind::FixedEndpoints;
            }
            StopCriteria stop;
            stop.max_iters = bench_max_iters;
            const BenchReport report = bench_race(model, strategies, bench_seeds, regime, stop, bench_in.seed);
            if (bench_out.empty()) {
                write_bench_csv(out, report);
            } else {
                write_bench_csv(bench_out, report);
            }
            if (!bench_traces.empty()) {
                std::filesystem::create_directories(bench_traces);
                for (std::size_t i = 0; i < report.rows.size(); ++i) {
                    const auto& row = report.rows[i];
                    const std::string name =
                        bench_traces + "/trace_seed" + std::to_string(row.seed) + "_" + row.strategy + ".csv";
                    write_trace_csv(name, report.traces[i]);
                }
            }
            return kExitOk;
        }
        if (synth->parsed()) {
            write_data_matrix(synth_out, synthetic_clusters(synth_n, synth_dim, synth_clusters, synth_seed, synth_sep).points);
            return kExitOk;
        }
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace embedopt
