#pragma once

// Forward simulation of the branching random walk under P: flat per-
// generation frontiers, running path minima, killed variants, the martingales
// W_n / D_n / D_n^(beta), stopping lines, and direct minimum-tail estimation.
//
// Frontiers are parallel arrays; only parent links to the previous generation
// are kept. Pruning above a barrier is the one approximation the engine ever
// makes, and every pruned particle leaves its weight in an explicit bias
// ledger.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "brwlab/exec.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/rw_kit.hpp"
#include "brwlab/stats.hpp"

namespace brw {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PrunePolicy {
  enum class Mode { None, Barrier };
  Mode mode = Mode::None;
  // Particles with position - (3/2) ln n above this offset may be discarded
  // in minimum-tracking runs.
  double barrier_offset = 20.0;
  bool track_bias = true;
};

struct Frontier {
  int generation = 0;
  double beta = 0.0;  // kill level used by alive_killbeta
  std::vector<double> positions;
  std::vector<double> path_min;  // running min over the ancestral path incl. self
  std::vector<uint8_t> alive_kill0;
  std::vector<uint8_t> alive_killbeta;
  std::vector<int32_t> parent_index;

  size_t size() const { return positions.size(); }
  static Frontier root(double beta = 0.0, double start = 0.0);
};

struct TreeRunStats {
  double M_n = kInf;
  double M_n_kill = kInf;
  int argmin_count = 0;
  int argmin_count_kill = 0;
  double W_n = 0.0;
  double D_n = 0.0;
  double D_n_beta = std::numeric_limits<double>::quiet_NaN();
  bool survived = false;
  double pruned_mass_bound = 0.0;  // sum over pruned u of (1 + V(u)+) e^-V(u)
  bool overflow = false;
};

// Engine-internal evolution knobs. run_tree and the estimators assemble these
// from a PrunePolicy plus the run horizon.
struct EvolveOptions {
  double barrier_abs = kInf;       // drop children with position above this
  double drop_path_below = -kInf;  // drop children whose path min falls below
  bool track_bias = true;
  size_t population_cap = 50'000'000;
};

struct PruneLedger {
  double weight = 0.0;       // sum e^-V over pruned particles
  double bound = 0.0;        // sum (1 + V+) e^-V (W and D bias bound)
  uint64_t particles = 0;

  void merge(const PruneLedger& o) {
    weight += o.weight;
    bound += o.bound;
    particles += o.particles;
  }
};

// One generation step; returns false on population-cap overflow (next holds
// the partial generation). `next` is overwritten.
bool evolve_into(const PointProcessModel& model, const Frontier& cur, Frontier& next,
                 const EvolveOptions& opt, RngStream& rng, PruneLedger& ledger,
                 std::vector<double>& scratch);

// Public single-step evolution per the frontier contract. horizon_n fixes the
// barrier (3/2) ln(horizon_n) + offset when the policy prunes.
bool evolve(Frontier& frontier, const PointProcessModel& model, const PrunePolicy& policy,
            RngStream& rng, int horizon_n, PruneLedger* ledger = nullptr,
            size_t population_cap = EvolveOptions{}.population_cap);

double barrier_level(const PrunePolicy& policy, int horizon_n);

// Runs one tree for n generations and reports the martingale values and
// minima. D_n^(beta) requires a renewal table and is NaN without one.
TreeRunStats run_tree(const PointProcessModel& model, int n, double beta,
                      const PrunePolicy& policy, RngStream& rng,
                      const RenewalFunction* renewal = nullptr,
                      size_t population_cap = EvolveOptions{}.population_cap);

struct StoppingLineCaps {
  int max_generation = 1000;
  size_t max_population = 10'000'000;
};

struct StoppingLineResult {
  struct Crosser {
    double position = 0.0;
    int generation = 0;
  };
  std::vector<Crosser> crossers;
  double sum_weight = 0.0;   // sum e^-V over the line
  double sum_vweight = 0.0;  // sum V e^-V over the line
  bool capped = false;
  uint64_t residual_population = 0;  // particles still below A when capped
  double residual_weight = 0.0;
};

// First-crossing particles of level A > 0 (positions and generations).
StoppingLineResult stopping_line(const PointProcessModel& model, double A, RngStream& rng,
                                 const StoppingLineCaps& caps = {});

struct TailRow {
  double z = 0.0;
  bool feasible = true;
  EstimateWithCI p_full;   // P(M_n < a_n(z))
  EstimateWithCI p_kill;   // P(M_n^kill < a_n(z))
  double ez_pkill = 0.0;   // e^z * p_kill
  double ez_pkill_se = 0.0;
  double ezz_pfull = 0.0;  // (e^z / z) * p_full
  double ezz_pfull_se = 0.0;
  double prune_bias_bound = 0.0;  // upper bound on pruning bias of either prob.
};

struct TailTable {
  int n = 0;
  uint64_t replications = 0;
  uint64_t seed = 0;
  std::vector<TailRow> rows;
  double mean_pruned_weight = 0.0;
  uint64_t overflow_count = 0;
};

// Direct Monte Carlo of the minimum tail at recentring (3/2) ln n - z, killed
// and unkilled on the same trees. Rows failing the feasibility guard
// e^-z * replications >= 100 are marked infeasible and left NaN.
TailTable minimum_tail_direct(const PointProcessModel& model, int n,
                              std::span<const double> z_grid, uint64_t replications,
                              const PrunePolicy& policy, uint64_t seed,
                              const ParallelConfig& par = {});

inline double recentering(int n) { return 1.5 * std::log(static_cast<double>(n)); }
inline double a_n(int n, double z) { return recentering(n) - z; }

}  // namespace brw
