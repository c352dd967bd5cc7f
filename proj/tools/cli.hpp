#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace flowlatin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

struct RunConfig {
  std::size_t workers = 1;
  std::size_t split_bytes = 64 * 1024;
  std::filesystem::path work_dir = ".flowwork";
  bool keep = false;
};

/// FLOWLATIN_WORKERS when set to a positive integer, otherwise the number of
/// hardware threads.
std::size_t default_workers();

/// Runs one command. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
             std::ostream& err);

}  // namespace flowlatin::cli
