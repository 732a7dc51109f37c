#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace shallowid::cli {

/// Exit codes: 0 success, 2 domain error, 3 parse or usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shallowid::cli
