#ifndef MSMAAD_TOOLS_CLI_HPP
#define MSMAAD_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace msmaad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

// Runs the msm_aad command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msmaad::cli

#endif  // MSMAAD_TOOLS_CLI_HPP
