#include "embedopt/io.hpp"

#include "embedopt/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace embedopt {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

double parse_double(std::string_view token, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line) + ": bad number '" + std::string(token) + "'");
    }
    return v;
}

std::vector<std::string_view> split_fields(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_sep = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; };
    while (i < s.size()) {
        while (i < s.size() && is_sep(s[i])) ++i;
        const std::size_t start = i;
        while (i < s.size() && !is_sep(s[i])) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

} // namespace

DataMatrix read_data_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split_fields(line);
        if (fields.empty() || fields.front().front() == '#') continue;
        std::vector<double> row;
        for (auto f : fields) row.push_back(parse_double(f, lineno));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(rows.front().size()) +
                             " values, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ParseError("data file needs at least two points");
    DataMatrix y(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t n = 0; n < rows.size(); ++n) {
        for (std::size_t i = 0; i < rows[n].size(); ++i) {
            y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = rows[n][i];
        }
    }
    return y;
}

DataMatrix read_data_matrix(const std::string& path) {
    auto in = open_in(path);
    return read_data_matrix(in);
}

void write_data_matrix(std::ostream& out, const DataMatrix& y) {
    for (Eigen::Index n = 0; n < y.cols(); ++n) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            if (i > 0) out << ' ';
            out << format_double(y(i, n));
        }
        out << '\n';
    }
}

void write_data_matrix(const std::string& path, const DataMatrix& y) {
    auto out = open_out(path);
    write_data_matrix(out, y);
}

AffinityGraph read_affinity_file(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    long long n = -1;
    int normalized = -1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 4 || fields[0] != "N" || fields[2] != "normalized") {
            throw ParseError("affinity file: expected header 'N <int> normalized <0|1>'");
        }
        n = static_cast<long long>(parse_double(fields[1], lineno));
        normalized = static_cast<int>(parse_double(fields[3], lineno));
        break;
    }
    if (n < 2 || (normalized != 0 && normalized != 1)) throw ParseError("affinity file: bad header");

    Matrix w = Matrix::Zero(n, n);
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split_fields(line);
        if (fields.empty() || fields.front().front() == '#') continue;
        if (fields.size() != 3) throw ParseError("line " + std::to_string(lineno) + ": expected 'n m w'");
        const double a = parse_double(fields[0], lineno);
        const double b = parse_double(fields[1], lineno);
        const double v = parse_double(fields[2], lineno);
        const auto i = static_cast<long long>(a);
        const auto j = static_cast<long long>(b);
        if (static_cast<double>(i) != a || static_cast<double>(j) != b || i < 0 || j < 0 || i >= n || j >= n ||
            i >= j) {
            throw ParseError("line " + std::to_string(lineno) + ": indices must satisfy 0 <= n < m < N");
        }
        w(i, j) = v;
        w(j, i) = v;
    }
    try {
        return AffinityGraph(std::move(w), normalized == 1);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("affinity file: ") + e.what());
    }
}

AffinityGraph read_affinity_file(const std::string& path) {
    auto in = open_in(path);
    return read_affinity_file(in);
}

void write_affinity_file(std::ostream& out, const AffinityGraph& w) {
    const auto n = static_cast<Eigen::Index>(w.order());
    out << "N " << n << " normalized " << (w.normalized() ? 1 : 0) << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = w.weights()(i, j);
            if (v != 0.0) out << i << ' ' << j << ' ' << format_double(v) << '\n';
        }
    }
}

void write_affinity_file(const std::string& path, const AffinityGraph& w) {
    auto out = open_out(path);
    write_affinity_file(out, w);
}

void write_embedding_csv(std::ostream& out, const Embedding& x) {
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (i > 0) out << ',';
            out << format_double(x(i, n));
        }
        out << '\n';
    }
}

void write_embedding_csv(const std::string& path, const Embedding& x) {
    auto out = open_out(path);
    write_embedding_csv(out, x);
}

Embedding read_embedding_csv(const std::string& path) { return read_data_matrix(path); }

void write_trace_csv(std::ostream& out, const OptTrace& trace) {
    out << "iter,error,grad_inf_norm,step,fevals,cum_seconds\n";
    char secs[32];
    for (const auto& r : trace.records) {
        std::snprintf(secs, sizeof(secs), "%.6f", r.seconds);
        out << r.iter << ',' << format_double(r.error) << ',' << format_double(r.grad_inf) << ','
            << format_double(r.step) << ',' << r.fevals << ',' << secs << '\n';
    }
    out << "# status=" << to_string(trace.status) << '\n';
}

void write_trace_csv(const std::string& path, const OptTrace& trace) {
    auto out = open_out(path);
    write_trace_csv(out, trace);
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
    out << "seed,strategy,final_error,iters,fevals,seconds,status\n";
    char secs[32];
    for (const auto& r : report.rows) {
        std::snprintf(secs, sizeof(secs), "%.6f", r.seconds);
        out << r.seed << ',' << r.strategy << ',' << format_double(r.final_error) << ',' << r.iterations << ','
            << r.fevals << ',' << secs << ',' << to_string(r.status) << '\n';
    }
}

void write_bench_csv(const std::string& path, const BenchReport& report) {
    auto out = open_out(path);
    write_bench_csv(out, report);
}

void write_homotopy_csv(std::ostream& out, const std::vector<LambdaStats>& stages) {
    out << "lambda,iters,fevals,seconds,final_error,status,shift_norm\n";
    char secs[32];
    for (const auto& s : stages) {
        std::snprintf(secs, sizeof(secs), "%.6f", s.seconds);
        out << format_double(s.lambda) << ',' << s.iterations << ',' << s.fevals << ',' << secs << ','
            << format_double(s.final_error) << ',' << to_string(s.status) << ',' << format_double(s.shift_norm)
            << '\n';
    }
}

void write_homotopy_csv(const std::string& path, const std::vector<LambdaStats>& stages) {
    auto out = open_out(path);
    write_homotopy_csv(out, stages);
}

} // namespace embedopt
