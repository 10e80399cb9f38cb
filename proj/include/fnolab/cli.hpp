#pragma once

#include <string>
#include <vector>

namespace fnolab::cli {

inline constexpr const char* tool_version = "0.1.0";

// Runs the lab CLI. Validation errors return nonzero; scientific outcomes
// (divergence, bound-violation reports) return zero with the findings in the
// emitted data files.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace fnolab::cli
