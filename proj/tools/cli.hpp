#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace moa::cli {

/// Entry point of the `moa` tool. `args` excludes the program name. Returns
/// 0 on success, 1 on a structured error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace moa::cli
