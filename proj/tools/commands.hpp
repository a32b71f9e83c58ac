#pragma once

#include <string>
#include <vector>

namespace cct::cli {

constexpr int exit_ok = 0;
constexpr int exit_validation_failure = 1;
constexpr int exit_usage = 2;

// Expands "--config FILE" (key = value lines) into "--key=value" tokens placed before the
// remaining arguments, so flags given on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

int run(const std::vector<std::string>& args);

}  // namespace cct::cli
