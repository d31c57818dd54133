#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "knotcord/homology.hpp"

namespace knotcord {

// Settings shared by every subcommand, populated from flags and their
// KNOTCORD_* environment overrides.
struct RunConfig {
  std::string field = "Q";  // "Q" or "Fp:<prime>"
  std::uint64_t budget_entries = 5'000'000;
  double budget_secs = 0.0;  // 0 = no wall-clock budget
  std::string cache_dir;     // empty = caching disabled
  int jobs = 1;
  bool verbose = false;

  void validate() const;    // MalformedSyntax on out-of-range values
  EngineConfig engine() const;
  std::string field_descriptor() const;  // normalized, for cache keys
};

// Runs one toolkit invocation.  `args` excludes the program name.  Primary
// results go to `out` (byte-deterministic for a given input, so cached and
// uncached runs compare equal); timing, warnings and errors go to `err`.
// Returns the process exit code: 0 success, 1 failed assertion or internal
// error, 2 malformed input, 3 budget exhausted, 4 missing data.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace knotcord
