#pragma once

// Offspring point-process models and their size-biased companions.
//
// A model describes the displacement point process of one branching step:
// how many children a particle has and where they land relative to the
// parent. The tilted sampler draws from the companion process whose density
// against the original is the total weight sum(exp(-v_i)), together with a
// spine child chosen with probability proportional to exp(-v_i). For models
// with i.i.d. displacements this is done exactly: size-bias the child count,
// tilt one uniformly chosen coordinate, then re-draw the spine index.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwlab/exec.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

namespace brw {

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Hard cap on children per sample; exceeding it is an error, never a silent
// truncation, so estimator unbiasedness cannot be quietly broken.
inline constexpr uint32_t kChildCap = 1u << 16;

struct AnalyticMoments {
  double mean_children = 0.0;
  double sigma_sq = 0.0;      // variance of the many-to-one step
  bool exact_boundary = false;
};

struct DisplacementSet {
  std::vector<double> displacements;
  int spine_index = -1;  // valid for tilted samples only

  bool has_spine() const { return spine_index >= 0; }
};

enum class ModelFamily {
  BinaryGaussian,   // fixed child count b, displacements iid N(mu0, s2)
  PoissonGaussian,  // child count 1 + Poisson(m), displacements iid N(mu0, s2)
  OneChildZero,     // degenerate: one child, displacement 0
  DriftOne,         // diagnostic: one child, displacement +drift (non-boundary)
  Custom,
};

using SampleHook = std::function<void(RngStream&, std::vector<double>&)>;
using TiltedSampleHook = std::function<int(RngStream&, std::vector<double>&)>;

struct PointProcessModel {
  std::string name;
  ModelFamily family = ModelFamily::BinaryGaussian;

  // i.i.d.-displacement parameters (Gaussian families).
  double mu0 = 0.0;
  double s2 = 0.0;
  int fixed_children = 2;    // BinaryGaussian
  double poisson_m = 1.0;    // PoissonGaussian
  double drift = 1.0;        // DriftOne
  double envelope = 0.0;     // rejection-fallback envelope for custom models

  std::optional<AnalyticMoments> analytic;
  SampleHook custom_sampler;
  TiltedSampleHook custom_tilted;

  // Appends child displacements to out (cleared first); returns child count.
  uint32_t sample_into(RngStream& rng, std::vector<double>& out) const;

  // As above for the tilted process; returns the spine child index.
  int sample_tilted_into(RngStream& rng, std::vector<double>& out) const;

  // True when the many-to-one step law has an exact sampler.
  bool has_exact_walk_step() const;
  double walk_sigma_sq() const;
  double sample_walk_step(RngStream& rng, std::vector<double>& scratch) const;

  bool is_gaussian_iid() const {
    return family == ModelFamily::BinaryGaussian || family == ModelFamily::PoissonGaussian;
  }

  // Stable hash of the canonical description, used for cache keys and the
  // CSV model_hash column.
  uint64_t hash() const;
  std::string describe() const;
};

PointProcessModel make_binary_gaussian(int children = 2);
PointProcessModel make_poisson_gaussian(double m = 1.0);
PointProcessModel make_one_child_zero();
PointProcessModel make_drift_one(double drift = 1.0);

PointProcessModel model_by_name(const std::string& name);

DisplacementSet sample_offspring(const PointProcessModel& model, RngStream& rng);
DisplacementSet sample_tilted_offspring(const PointProcessModel& model, RngStream& rng);

struct ModelReport {
  std::string model_name;
  uint64_t model_hash = 0;
  uint64_t budget = 0;
  uint64_t seed = 0;
  EstimateWithCI mean_children;    // E[sum 1]
  EstimateWithCI mean_weight;      // E[sum e^-V]
  EstimateWithCI mean_vweight;     // E[sum V e^-V]
  EstimateWithCI sigma_sq;         // E[sum V^2 e^-V]
  EstimateWithCI x_log2;           // E[X (ln+ X)^2]
  EstimateWithCI xt_log;           // E[Xt ln+ Xt]
  bool supercritical_pass = false;
  bool boundary_pass = false;
  bool derivative_pass = false;
  bool sigma_pass = false;
  bool all_pass = false;
};

// Estimates the boundary-case moments over `budget` fresh samples and checks
// them at 4 standard errors. Requires budget >= 1e4.
ModelReport check_boundary_conditions(const PointProcessModel& model, uint64_t budget,
                                      uint64_t seed, const ParallelConfig& par = {});

}  // namespace brw
