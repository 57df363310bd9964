#pragma once

// Output plumbing: atomic file writes (temp-then-rename), the shared CSV
// schema, and deterministic number formatting. Outputs never embed wall-clock
// time or worker counts, so a fixed (config, seed) pair reproduces files
// byte for byte.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "brwlab/stats.hpp"

namespace brw {

inline constexpr int kSchemaVersion = 1;

void atomic_write(const std::filesystem::path& path, const std::string& content);

// Shortest round-trip decimal representation.
std::string format_double(double v);
std::string format_hash(uint64_t h);

struct CsvRow {
  double zx = 0.0;  // z or x, depending on the experiment
  int n = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  uint64_t replications = 0;
  std::string estimator_kind;
  uint64_t model_hash = 0;
  uint64_t seed = 0;
};

// Header: z,n,estimate,stderr,replications,estimator_kind,model_hash,seed,
// schema_version.
std::string csv_table(const std::vector<CsvRow>& rows, const std::string& zx_name = "z");

}  // namespace brw
