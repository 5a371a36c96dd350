#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace forge::cli {

// Runs one `forge` invocation. Exit codes: 0 success, 1 domain error, 2 usage error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace forge::cli
