#ifndef EMBEDOPT_IO_HPP
#define EMBEDOPT_IO_HPP

#include "embedopt/affinity.hpp"
#include "embedopt/driver.hpp"
#include "embedopt/models.hpp"
#include "embedopt/optimize.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace embedopt {

// Text formats.  Numbers are written with 17 significant digits so that
// reading back a written file reproduces every double exactly.

/// One point per line, coordinates separated by whitespace or commas.
/// Blank lines and lines starting with '#' are skipped.  Returns D x N.
DataMatrix read_data_matrix(std::istream& in);
DataMatrix read_data_matrix(const std::string& path);
void write_data_matrix(std::ostream& out, const DataMatrix& y);
void write_data_matrix(const std::string& path, const DataMatrix& y);

/// Header `N <int> normalized <0|1>`, then `n m w` triples (0-based, n < m).
AffinityGraph read_affinity_file(std::istream& in);
AffinityGraph read_affinity_file(const std::string& path);
void write_affinity_file(std::ostream& out, const AffinityGraph& w);
void write_affinity_file(const std::string& path, const AffinityGraph& w);

/// N rows of d comma-separated coordinates.
void write_embedding_csv(std::ostream& out, const Embedding& x);
void write_embedding_csv(const std::string& path, const Embedding& x);
Embedding read_embedding_csv(const std::string& path);

/// `iter,error,grad_inf_norm,step,fevals,cum_seconds` rows, then `# status=<...>`.
void write_trace_csv(std::ostream& out, const OptTrace& trace);
void write_trace_csv(const std::string& path, const OptTrace& trace);

/// `seed,strategy,final_error,iters,fevals,seconds,status`.
void write_bench_csv(std::ostream& out, const BenchReport& report);
void write_bench_csv(const std::string& path, const BenchReport& report);

/// `lambda,iters,fevals,seconds,final_error,status,shift_norm`.
void write_homotopy_csv(std::ostream& out, const std::vector<LambdaStats>& stages);
void write_homotopy_csv(const std::string& path, const std::vector<LambdaStats>& stages);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

} // namespace embedopt

#endif
