#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repcause::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs one invocation. Returns 0 on success, 2 on usage errors and 1 on
// runtime errors; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace repcause::cli
