#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wvsort::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

/// Every registered option of every subcommand, for --help introspection.
struct FlagInfo {
    std::string subcommand;  ///< empty for top-level options
    std::string name;        ///< e.g. "--mask-prob"
    std::string description;
};
std::vector<FlagInfo> flag_registry();

/// Help text as printed by `--help` (top level or for one subcommand).
std::string help_text(std::string_view subcommand = {});

}  // namespace wvsort::cli
