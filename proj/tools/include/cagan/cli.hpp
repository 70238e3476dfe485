#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cagan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `cagan` tool. `args` excludes the program name. Data
/// goes to `out` or to the declared output paths, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cagan::cli
