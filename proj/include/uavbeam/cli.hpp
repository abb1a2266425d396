#ifndef UAVBEAM_CLI_HPP
#define UAVBEAM_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace uavbeam::cli {

/// Run the command-line harness. args excludes the program name.
/// Exit codes: 0 success, 1 usage error, 2 config/schema error,
/// 3 numerical failure (divergence, degenerate geometry, failed check).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uavbeam::cli

#endif
