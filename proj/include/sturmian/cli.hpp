// cli.hpp: command-line front end (bulk, edge, flow, labels, winding, verify, plot).

#pragma once

#include <iosfwd>

namespace sturmian::cli {

enum ExitCode : int {
    ok = 0,
    usage_error = 1,
    numerical_failure = 2,
    verification_failure = 3,
};

/// Parses argv and runs one subcommand. Results go to `out` unless --out names
/// a file; diagnostics go to `err`. Returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sturmian::cli
