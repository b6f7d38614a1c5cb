#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fuzzens::cli {

// Runs one command line (args[0] is the program name). Exit codes:
// 0 success, 1 runtime/data error, 2 usage error.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace fuzzens::cli
