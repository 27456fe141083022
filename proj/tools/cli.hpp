#pragma once

#include <iosfwd>

namespace dpca::cli {

/// Runs the `dpca` command line. Regular output goes to `out`, the one-line
/// diagnostic of a failed run to `err`. Returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpca::cli
