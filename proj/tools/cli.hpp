#ifndef CNSPK_TOOLS_CLI_HPP
#define CNSPK_TOOLS_CLI_HPP

#include <iosfwd>

namespace cnspk::cli {

/// Exit codes: 0 success, 1 invalid input, 2 computation failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cnspk::cli

#endif  // CNSPK_TOOLS_CLI_HPP
