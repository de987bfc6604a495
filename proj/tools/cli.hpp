#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mixdyn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBudget = 3;
inline constexpr int kExitNumeric = 4;

// Entry point of the `mixdyn` tool, split from main() so tests can drive it
// in-process. Reports go to files under --out; `out` gets one summary line per
// command and `err` the one-line diagnostic on failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a, used for graph cache file names.
std::uint64_t fnv1a(const std::string& text);

}  // namespace mixdyn::cli
