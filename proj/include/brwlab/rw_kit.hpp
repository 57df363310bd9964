#pragma once

// Fluctuation theory of the one-dimensional many-to-one walk: strict
// descending ladder statistics, renewal functions for S and -S, the renewal
// constant c0, the stay-positive constants C+/C-, ballot-type probability
// scalings, and the n^{-3/2} window asymptotic used throughout the tail
// analysis.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "brwlab/exec.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

namespace brw {

struct WalkModel {
  enum class Kind { GaussExact, SpineGeneric, Zero };

  Kind kind = Kind::GaussExact;
  double sigma_sq = 0.0;
  double mu = 0.0;  // Gaussian step mean (0 for boundary models)
  const PointProcessModel* source = nullptr;
  uint64_t source_hash = 0;

  double sigma() const { return std::sqrt(sigma_sq); }

  double step(RngStream& rng, std::vector<double>& scratch) const {
    switch (kind) {
      case Kind::GaussExact:
        return rng.next_normal(mu, sigma());
      case Kind::Zero:
        return 0.0;
      case Kind::SpineGeneric:
        return source->sample_walk_step(rng, scratch);
    }
    return 0.0;
  }
};

// Builds the many-to-one walk of a boundary-case model. Uses the exact tilted
// Gaussian when available, otherwise the generic spine-displacement sampler.
WalkModel derive_walk(const PointProcessModel& model);

struct LadderTable {
  std::vector<double> heights;        // |H1| samples for S, sorted ascending
  std::vector<double> epochs;         // matching T1 samples (pre-sort order lost)
  std::vector<double> heights_minus;  // same for -S
  std::vector<double> epochs_minus;
  uint64_t budget = 0;
  uint64_t step_cap = 0;
  uint64_t cap_events_plus = 0;   // walks that hit the step cap (excluded, counted)
  uint64_t cap_events_minus = 0;
  uint64_t seed = 0;
  uint64_t model_hash = 0;

  double mean_height(bool minus_side) const;
  double mean_height_se(bool minus_side) const;
};

// Simulates i.i.d. (|H1|, T1) samples for S and -S to the first strict
// descending ladder epoch of each. Walks exceeding step_cap are dropped and
// counted; fresh walks replace them so table sizes equal the budget.
LadderTable build_ladder_table(const WalkModel& walk, uint64_t budget, uint64_t seed,
                               uint64_t step_cap = 100000000ULL,
                               const ParallelConfig& par = {});

struct RenewalFunction {
  std::vector<double> grid;     // increasing, grid[0] == 0
  std::vector<double> values;   // R estimates, values[0] == 1 exactly
  std::vector<double> stderrs;  // per-point MC standard errors
  EstimateWithCI c0_hat;        // 1 / mean |H1|, delta-method SE
  EstimateWithCI c0_slope;      // affine fit of R over the upper half grid
  uint64_t replications = 0;
  bool minus_side = false;

  // R(x): exactly 0 for x < 0, exactly 1 at x = 0, linear interpolation on
  // the grid, c0-sloped extrapolation beyond it.
  double eval(double x) const;
  double se_at(double x) const;
  // Trapezoid integral of the interpolant over [a, b] (grid-resolution steps).
  double integral(double a, double b) const;
  double integral_se(double a, double b) const;
};

// Estimates R (or R_minus) on [0, x_max] by simulating the ladder-height
// renewal process with heights resampled from the table.
RenewalFunction estimate_renewal(const LadderTable& table, bool minus_side, double x_max,
                                 double dx, uint64_t replications, uint64_t seed,
                                 const ParallelConfig& par = {});

// Point estimate of R(x) straight from the definition-level simulation:
// 1 + expected number of later ladder points in [-x, 0]. Exact 0 / 1 rules
// for x < 0 / x == 0.
EstimateWithCI renewal_R(const LadderTable& table, double x, uint64_t replications,
                         uint64_t seed);
EstimateWithCI renewal_R_minus(const LadderTable& table, double x, uint64_t replications,
                               uint64_t seed);

struct ConstantsRow {
  int n = 0;
  EstimateWithCI stay_positive;  // P(min_{1..n} S >= 0)
  EstimateWithCI stay_negative;  // P(max_{1..n} S <= 0)
  double sqrt_n_scaled_plus = 0.0;
  double sqrt_n_scaled_minus = 0.0;
  double sparre_andersen_exact = 0.0;  // symmetric continuous reference
};

struct ConstantsReport {
  std::vector<ConstantsRow> rows;
  EstimateWithCI c_plus_hat;   // intercept of sqrt(n) p_n against 1/sqrt(n)
  EstimateWithCI c_minus_hat;
  EstimateWithCI c0_hat;
  double c_symmetric_exact = 0.0;  // 1/sqrt(pi)
  uint64_t seed = 0;
};

ConstantsReport estimate_constants(const WalkModel& walk, std::span<const int> n_grid,
                                   uint64_t budget, uint64_t seed,
                                   const LadderTable* ladder = nullptr,
                                   const ParallelConfig& par = {});

enum class BallotScenario { Kozlov, Window, TwoBarrier, Lower };

struct BallotParams {
  double x = 0.0;       // starting point (Kozlov / Window / TwoBarrier)
  double y = 0.0;       // late barrier level (TwoBarrier)
  double a = 0.0;       // window bottom
  double b = 0.0;       // window top
  double lambda = 0.5;  // late-window start fraction
  int n = 0;
};

struct CheckReport {
  std::string label;
  EstimateWithCI probability;
  double scale_exponent = 0.0;  // probability compared against n^scale_exponent
  double scaled = 0.0;          // probability * n^{-scale_exponent}
  double scaled_se = 0.0;
  uint64_t seed = 0;
};

CheckReport ballot_check(const WalkModel& walk, BallotScenario scenario,
                         const BallotParams& params, uint64_t budget, uint64_t seed,
                         const ParallelConfig& par = {});

struct Lemma21Report {
  EstimateWithCI lhs;      // E[F(S_n - y); min_[0,n] >= 0; min_[ln,n] >= y]
  double lhs_scaled = 0.0; // n^{3/2} * lhs
  double lhs_scaled_se = 0.0;
  double constant = 0.0;   // C- C+ sqrt(pi) / (sigma sqrt(2))
  double integral = 0.0;   // int_0^a R_minus
  double integral_se = 0.0;
  double rhs = 0.0;        // constant * integral
  double rhs_se = 0.0;
  uint64_t seed = 0;
};

// Checks the n^{-3/2} window asymptotic with F = 1_{[0,a]}. The constant uses
// the exact symmetric-walk values C+ = C- = 1/sqrt(pi) unless overridden.
Lemma21Report lemma21_check(const WalkModel& walk, double a, int n, double y,
                            double lambda_n, uint64_t budget,
                            const RenewalFunction& r_minus, uint64_t seed,
                            double c_plus = 0.0, double c_minus = 0.0,
                            const ParallelConfig& par = {});

// Binary cache: magic "BRWL", version u32, count u64, then count (height,
// epoch) f64 pairs for S followed by count pairs for -S. Little-endian.
void save_ladder_cache(const std::filesystem::path& path, const LadderTable& table);
LadderTable load_ladder_cache(const std::filesystem::path& path);
std::string ladder_cache_name(uint64_t model_hash, uint64_t seed, uint64_t budget);

}  // namespace brw
