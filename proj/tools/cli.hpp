#pragma once

#include <iosfwd>

namespace wmkit::cli {

/// Runs the wmkit command line. Returns 0 on success, 1 on runtime errors
/// (and failed theorem checks), 2 on bad flags.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wmkit::cli
