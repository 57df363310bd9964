#pragma once

// Simulation under the tilted measure: marked trees with a spine, the
// unbiased killed-minimum representation, good-vertex diagnostics, the
// conditioned spine step of the second change of measure, and the
// first-crossing decomposition of the unkilled tail.
//
// The marked tree consists of the spine path w_0..w_n, the sibling broods of
// each spine vertex, and an ordinary branching random walk hanging off every
// sibling. Estimators that only condition on the spine path defer the sibling
// subtrees until the path event has been checked; the sibling displacements
// are always drawn first, so laziness never changes the sampled law.

#include <cstdint>
#include <span>
#include <vector>

#include "brwlab/brw_engine.hpp"
#include "brwlab/exec.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/rw_kit.hpp"
#include "brwlab/stats.hpp"

namespace brw {

// Barrier d_k(n, zz, lambda): 0 up to lambda*n, then max(a_n(zz + 1), 0).
double barrier_d(int n, double zz, double lambda, int k);

struct PathConstraint {
  enum class Kind { None, ZzL, Custom };
  Kind kind = Kind::None;
  double z = 0.0;
  double L = 0.0;
  int n = 0;
  std::vector<double> custom_d;  // d_0..d_n for Kind::Custom

  double d(int k) const {
    switch (kind) {
      case Kind::None:
        return 0.0;  // the killed tree still requires the path to stay >= 0
      case Kind::ZzL:
        return barrier_d(n, z + L, 0.5, k);
      case Kind::Custom:
        return custom_d.at(static_cast<size_t>(k));
    }
    return 0.0;
  }
};

struct SpineRealization {
  int depth = 0;
  std::vector<double> spine_positions;  // V(w_0)..V(w_n)
  std::vector<double> spine_prefix_min;
  struct SiblingGroup {
    int generation = 0;              // the siblings live at this generation
    std::vector<double> positions;   // absolute positions, spine child excluded
  };
  std::vector<SiblingGroup> siblings;  // one group per generation 1..n

  // Filled when subtrees were evolved.
  bool has_tree = false;
  std::vector<double> leaf_positions;  // generation-n population incl. the spine
  std::vector<double> leaf_path_min;
  TreeRunStats tree_stats;
  PruneLedger subtree_ledger;
};

struct SpineOptions {
  bool evolve_subtrees = false;
  PrunePolicy policy;  // applied to sibling subtrees when evolving
  size_t population_cap = EvolveOptions{}.population_cap;
};

// One marked tree under the tilted measure. The spine reproduces by the
// size-biased point process; siblings spawn ordinary branching random walks.
SpineRealization run_spine_tree(const PointProcessModel& model, int n, RngStream& rng,
                                const SpineOptions& options = {});

struct KilledMinResult {
  EstimateWithCI estimate;  // P(M_n^kill in I_n(z) [, argmin in Z^{z,L}_n])
  int n = 0;
  double z = 0.0;
  double L = 0.0;
  uint64_t replications = 0;
  uint64_t accepted = 0;        // spine path satisfied the constraint
  uint64_t spine_was_min = 0;   // accepted replications where w_n achieved M^kill
  double mean_pruned_weight = 0.0;
};

// Unbiased spine estimator of the killed window probability: each replication
// contributes e^{V(w_n)} 1{V(w_n) = M_n^kill} / #argmin on the constraint
// event, zero otherwise. Kind::None estimates P(M_n^kill in I_n(z)).
KilledMinResult killed_min_estimator(const PointProcessModel& model, int n, double z,
                                     double L, PathConstraint::Kind kind,
                                     uint64_t replications, uint64_t seed,
                                     const PrunePolicy& policy = {},
                                     const ParallelConfig& par = {});

// As above but for the cumulative event {M_n^kill < a_n(z)}; used by the
// window-summed tail experiment as the sum of unit windows.
KilledMinResult killed_tail_estimator(const PointProcessModel& model, int n, double z,
                                      uint64_t replications, uint64_t seed,
                                      const PrunePolicy& policy = {},
                                      const ParallelConfig& par = {});

struct GoodVertexReport {
  std::vector<uint8_t> ok;  // index k-1 for generation k = 1..n
  int first_violation = -1; // generation of the first violation, -1 if none
  bool all_ok = true;
};

// Condition: sum over siblings of e^{-(V(v)-d_k)} (1 + (V(v)-d_k)+) stays
// below B e^{-e_k}, with e_k = k^{1/12} up to n/2 and (n-k)^{1/12} beyond.
GoodVertexReport good_vertex_diagnostic(const SpineRealization& realization, double z,
                                        double L, double B);

// Frequency that the spine is (z,L)-good conditioned on w_n in Z^{z,L}_n.
EstimateWithCI good_vertex_frequency(const PointProcessModel& model, int n, double z,
                                     double L, double B, uint64_t replications,
                                     uint64_t seed, const ParallelConfig& par = {});

struct ConditionedStepLog {
  uint64_t proposals = 0;
  uint64_t envelope_breaches = 0;
  double envelope_width_sigmas = 0.0;
};

// One step of the walk conditioned to stay above -beta, by rejection against
// the monotone envelope R(x + beta + w*sigma) / R(x + beta). The width w
// doubles on a breach (logged) and the proposal is re-drawn.
double conditioned_spine_step(const WalkModel& walk, const RenewalFunction& renewal,
                              double x, double beta, RngStream& rng,
                              ConditionedStepLog* log = nullptr);

struct DecompositionReport {
  int n = 0;
  double z = 0.0;
  double A = 0.0;
  uint64_t replications = 0;
  EstimateWithCI sum_B;        // E[sum_{u in S^{z-A}, |u| <= sqrt n} B_n^z(u)]
  EstimateWithCI sum_B_tame;   // same restricted to u in T^{z-A}
  double renewal_value = 0.0;  // R(z - A)
  double renewal_se = 0.0;
  double ratio = 0.0;          // e^z * sum_B / R(z - A), compare with C1
  double ratio_se = 0.0;
  double mean_members = 0.0;   // mean #{u in S^{z-A}, |u| <= sqrt n}
  uint64_t mask_overflows = 0; // replications with more trackable members than bits
  double mean_pruned_weight = 0.0;
};

// First-crossing decomposition of the unkilled tail: enumerates new-running-
// minimum vertices u down to -(z-A) within sqrt(n) generations and tests for
// a descendant of u that stays above V(u) and ends below a_n(z) at time n.
DecompositionReport first_crossing_decomposition(const PointProcessModel& model, int n,
                                                 double z, double A,
                                                 uint64_t replications, uint64_t seed,
                                                 const RenewalFunction& renewal,
                                                 const PrunePolicy& policy = {},
                                                 const ParallelConfig& par = {});

}  // namespace brw
