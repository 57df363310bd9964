#pragma once

// Estimator campaigns: the Gumbel-mixture limit law, the killed and unkilled
// minimum tails with their constants, and the identity suite that exercises
// every exact-in-expectation relation the lab is built on.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brwlab/brw_engine.hpp"
#include "brwlab/exec.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/rw_kit.hpp"
#include "brwlab/spine_engine.hpp"
#include "brwlab/stats.hpp"

namespace brw {

struct LimitLawReport {
  int n = 0;
  uint64_t replications = 0;
  uint64_t seed = 0;
  std::vector<double> x_grid;
  std::vector<double> empirical_survival;  // P(M_n >= (3/2) ln n + x)
  std::vector<double> empirical_se;
  std::vector<double> mixture_prediction;  // mean exp(-C e^x max(D_n, 0))
  std::vector<double> mixture_se;
  double C_hat = 0.0;          // fitted at x = 0
  double sup_distance = 0.0;   // over the grid
  uint64_t dead_trees = 0;
  bool flagged = false;        // too few surviving trees to fit
};

// Records (M_n, D_n) per tree with exact D tracking (no pruning) and compares
// the empirical survival of the recentred minimum with the Gumbel mixture.
// D_infinity is approximated by max(D_n, 0): the limit is almost surely
// non-negative and the truncation keeps the mixture curve inside [0, 1].
LimitLawReport exp_limit_law(const PointProcessModel& model, int n,
                             std::span<const double> x_grid, uint64_t replications,
                             uint64_t seed, const ParallelConfig& par = {},
                             size_t population_cap = EvolveOptions{}.population_cap);

// Same trees evaluated at two horizons; the trees are grown once to n_high
// and snapshotted at n_low.
std::pair<LimitLawReport, LimitLawReport> exp_limit_law_paired(
    const PointProcessModel& model, int n_low, int n_high,
    std::span<const double> x_grid, uint64_t replications, uint64_t seed,
    const ParallelConfig& par = {},
    size_t population_cap = EvolveOptions{}.population_cap);

struct KilledTailRow {
  double z = 0.0;
  bool feasible = true;
  EstimateWithCI p_cum;      // P(M_n^kill < a_n(z)), spine estimator
  double ez_p = 0.0;         // e^z * p_cum
  double ez_p_se = 0.0;
  EstimateWithCI p_window;   // P(M_n^kill in I_n(z)) from the same batch
  double ez_window = 0.0;
  double ez_window_se = 0.0;
};

struct TailReport {
  int n = 0;
  uint64_t replications = 0;
  uint64_t seed = 0;
  std::vector<KilledTailRow> rows;
  double plateau_ratio = 0.0;  // max/min of ez_p over the upper half grid
  EstimateWithCI C1_hat;       // precision-weighted mean of ez_p
  uint64_t accepted = 0;
  double mean_pruned_weight = 0.0;
};

// Killed tail via the spine representation, one shared batch across the z
// grid: the cumulative probability is the geometric sum of the unit windows,
// realised here as the same integrand summed over the window partition.
TailReport exp_killed_tail(const PointProcessModel& model, int n,
                           std::span<const double> z_grid, uint64_t budget,
                           uint64_t seed, const PrunePolicy& policy = {},
                           const ParallelConfig& par = {},
                           size_t population_cap = EvolveOptions{}.population_cap);

struct FullTailRow {
  double z = 0.0;
  bool feasible = true;
  EstimateWithCI p_direct;       // P(M_n < a_n(z)), direct MC
  EstimateWithCI p_kill_direct;  // P(M_n^kill < a_n(z)) from the same trees
  double ezz_p = 0.0;            // (e^z / z) * p
  double ezz_p_se = 0.0;
  double ratio_to_c1c0 = 0.0;    // ezz_p / (C1_hat * c0_hat)
  double ratio_se = 0.0;
  EstimateWithCI decomposition;  // e^z E[sum B] / R(z - A) from the S/B route
};

struct FullTailReport {
  int n = 0;
  double A = 0.0;
  uint64_t replications = 0;
  uint64_t seed = 0;
  std::vector<FullTailRow> rows;
  double c1_c0 = 0.0;
};

// Unkilled tail: direct Monte Carlo against C1 * c0, with the first-crossing
// decomposition estimator alongside.
FullTailReport exp_full_tail(const PointProcessModel& model, int n,
                             std::span<const double> z_grid, uint64_t budget,
                             uint64_t seed, double C1_hat, double c0_hat, double A,
                             const RenewalFunction& renewal,
                             const PrunePolicy& policy = {},
                             const ParallelConfig& par = {},
                             uint64_t decomposition_budget = 0);

struct SuiteCheck {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;  // the |value - target| bound actually applied
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string model_name;
  uint64_t model_hash = 0;
  uint64_t seed = 0;
  std::vector<SuiteCheck> checks;
  bool all_pass = true;

  void add(SuiteCheck check) {
    all_pass = all_pass && check.pass;
    checks.push_back(std::move(check));
  }
};

struct SuiteBudgets {
  uint64_t boundary = 200000;
  uint64_t martingale_trees = 4000;
  int martingale_n = 10;
  uint64_t many_to_one = 200000;
  uint64_t spine_draws = 20000;
  int spine_n = 5;
  uint64_t resample_trees = 5000;
  int resample_n = 6;
  uint64_t ladder_budget = 100000;
  uint64_t ladder_step_cap = 1000000;
  uint64_t renewal_reps = 100000;
  uint64_t tanaka_reps = 100000;
  uint64_t stay_positive_reps = 200000;
};

// Runs every identity check at 4 standard errors: boundary moments, the
// three martingales, many-to-one (plain and killed), the spine marginal and
// spine-selection identities, Tanaka harmonicity, renewal consistency, and
// Sparre-Andersen exactness.
SuiteReport exp_identity_suite(const PointProcessModel& model, uint64_t seed,
                               const SuiteBudgets& budgets = {},
                               const ParallelConfig& par = {});

// Closed-form variances of W_n and D_n for i.i.d.-Gaussian-displacement
// models, by the second-moment recursion; used as the oracle standard error
// in martingale mean tests (the empirical SE underestimates badly because
// the second moment of W_n doubles every generation).
struct MartingaleVariance {
  double var_w = 0.0;
  double var_d = 0.0;
};
MartingaleVariance analytic_martingale_variance(const PointProcessModel& model, int n);

}  // namespace brw
