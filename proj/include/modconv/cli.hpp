#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace modconv {

enum class ExitStatus : int {
  success = 0,
  failure = 1,  // execution failed
  usage = 2,    // bad flags or config
};

/// Entry point behind the `modconv` binary. Data goes to `out`, diagnostics to `err`.
ExitStatus run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modconv
