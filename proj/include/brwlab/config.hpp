#pragma once

// Run configuration: a small INI-style file with [model], [experiment] and
// [execution] sections. The schema is closed; unknown sections or keys are
// rejected with the offending line number. Numeric parameters are written as
// plain decimal strings and parsed with strtod, so a config file pins the
// model bit for bit across runs.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwlab/brw_engine.hpp"
#include "brwlab/exec.hpp"
#include "brwlab/offspring.hpp"

namespace brw {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  // [model]
  std::string model_name = "binary-gaussian";
  int children = 2;
  double poisson_m = 1.0;
  double drift = 1.0;
  double envelope = 0.0;

  // [experiment]
  int n = 12;
  int n_low = 12;
  double beta = 1.0;
  double z_min = 2.0, z_max = 4.0, z_step = 0.5;
  double x_min = -2.0, x_max = 2.0, x_step = 0.25;
  double A = 1.0;
  double L = 0.0;

  // [execution]
  uint64_t seed = 42;
  uint64_t replications = 10000;
  uint64_t walk_budget = 1000000;
  uint64_t ladder_budget = 200000;
  uint64_t ladder_step_cap = 100000000;
  uint64_t renewal_reps = 200000;
  unsigned workers = 0;
  uint64_t chunk_size = 4096;
  uint64_t memory_cap_mb = 2048;
  std::string out_dir = "out";
  std::string prune = "none";  // none | barrier
  double prune_lambda = 20.0;

  PointProcessModel make_model() const;
  PrunePolicy make_policy() const;
  ParallelConfig make_parallel() const;
  size_t population_cap() const;
  std::vector<double> z_grid() const;
  std::vector<double> x_grid() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::filesystem::path& path);

}  // namespace brw
