#ifndef FGA_CLI_HPP
#define FGA_CLI_HPP

#include <string>
#include <vector>

namespace fga {

// Entry point behind the `fga` binary; `args` excludes the program name.
// Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 numeric
// failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace fga

#endif  // FGA_CLI_HPP
