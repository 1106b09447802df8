#ifndef EMBEDOPT_CLI_HPP
#define EMBEDOPT_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace embedopt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Runs the command line (argv[0] included).  Subcommands: embed, homotopy,
/// bench, synth.  Returns 0 on success, 1 on usage errors, 2 on numerical
/// failure.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

} // namespace embedopt

#endif
