#pragma once

#include <iostream>
#include <string_view>

namespace wvsort::log {

/// 0 = quiet, 1 = warnings and progress (default), 2 = verbose.
inline int& verbosity() {
    static int level = 1;
    return level;
}

inline void warn(std::string_view message) {
    if (verbosity() >= 1) std::cerr << "warning: " << message << '\n';
}

inline void info(std::string_view message) {
    if (verbosity() >= 1) std::cerr << message << '\n';
}

inline void debug(std::string_view message) {
    if (verbosity() >= 2) std::cerr << message << '\n';
}

}  // namespace wvsort::log
