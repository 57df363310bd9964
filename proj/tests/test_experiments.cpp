#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "brwlab/experiments.hpp"

using namespace brw;

namespace {
const ParallelConfig kPar{2, 4096};
}

TEST_CASE("limit-law report invariants") {
  const auto model = make_binary_gaussian();
  std::vector<double> xs;
  for (double x = -2.0; x <= 2.0 + 1e-9; x += 0.5) xs.push_back(x);
  const auto rep = exp_limit_law(model, 10, xs, 500, 1, kPar);
  REQUIRE(rep.x_grid.size() == xs.size());
  CHECK_FALSE(rep.flagged);
  CHECK(rep.dead_trees == 0);  // binary branching never dies
  for (size_t i = 0; i < xs.size(); ++i) {
    CHECK(rep.empirical_survival[i] >= 0.0);
    CHECK(rep.empirical_survival[i] <= 1.0);
    CHECK(rep.mixture_prediction[i] >= 0.0);
    CHECK(rep.mixture_prediction[i] <= 1.0);
    if (i > 0) {
      CHECK(rep.empirical_survival[i] <= rep.empirical_survival[i - 1]);
      CHECK(rep.mixture_prediction[i] <= rep.mixture_prediction[i - 1]);
    }
  }
  CHECK(rep.C_hat > 0.0);
  // The fit anchors the two curves at x = 0.
  const size_t mid = xs.size() / 2;
  CHECK(std::abs(rep.empirical_survival[mid] - rep.mixture_prediction[mid]) < 1e-6);
  CHECK(rep.sup_distance < 0.25);
}

TEST_CASE("limit-law tails pinch at both grid ends") {
  const auto model = make_binary_gaussian();
  const double xs[] = {-6.0, 0.0, 6.0};
  const auto rep = exp_limit_law(model, 12, xs, 800, 3, kPar);
  CHECK(rep.empirical_survival[0] > 0.95);
  CHECK(rep.mixture_prediction[0] > 0.95);
  CHECK(rep.empirical_survival[2] <=
        rep.mixture_prediction[2] + 3.0 * (rep.empirical_se[2] + rep.mixture_se[2]) + 0.01);
}

TEST_CASE("paired limit-law horizons share trees") {
  const auto model = make_binary_gaussian();
  const double xs[] = {-1.0, 0.0, 1.0};
  const auto [lo, hi] = exp_limit_law_paired(model, 8, 12, xs, 400, 5, kPar);
  CHECK(lo.n == 8);
  CHECK(hi.n == 12);
  CHECK(lo.replications == hi.replications);
  CHECK_THROWS(exp_limit_law_paired(model, 8, 20, xs, 10, 5, kPar));
}

TEST_CASE("killed tail: cumulative rows dominate their windows and decrease") {
  const auto model = make_binary_gaussian();
  PrunePolicy barrier;
  barrier.mode = PrunePolicy::Mode::Barrier;
  barrier.barrier_offset = 10.0;
  const double zs[] = {1.0, 1.5, 2.0, 2.5};
  const auto rep = exp_killed_tail(model, 12, zs, 80000, 7, barrier, kPar);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.accepted > 0);
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].p_cum.value >= rep.rows[i].p_window.value);
    if (i > 0) CHECK(rep.rows[i].p_cum.value <= rep.rows[i - 1].p_cum.value);
  }
  CHECK(rep.C1_hat.value > 0.0);
  CHECK(rep.plateau_ratio >= 1.0);
  CHECK_THROWS(exp_killed_tail(model, 12, std::vector<double>{5.0}, 1000, 7));
}

TEST_CASE("killed tail window agrees with the dedicated window estimator") {
  const auto model = make_binary_gaussian();
  PrunePolicy barrier;
  barrier.mode = PrunePolicy::Mode::Barrier;
  barrier.barrier_offset = 12.0;
  const double zs[] = {1.5};
  const auto rep = exp_killed_tail(model, 12, zs, 100000, 9, barrier, kPar);
  const auto window = killed_min_estimator(model, 12, 1.5, 0.0,
                                           PathConstraint::Kind::None, 100000, 11,
                                           barrier, kPar);
  CHECK(ci_overlap(rep.rows[0].p_window, window.estimate));
}

TEST_CASE("full tail report wiring") {
  const auto model = make_binary_gaussian();
  PrunePolicy barrier;
  barrier.mode = PrunePolicy::Mode::Barrier;
  barrier.barrier_offset = 10.0;
  const auto& renewal = [] {
    static RenewalFunction rf = [] {
      const auto walk = derive_walk(make_binary_gaussian());
      const auto lad = build_ladder_table(walk, 20000, 401, 1000000ULL, kPar);
      return estimate_renewal(lad, false, 20.0, 0.05, 60000, 403, kPar);
    }();
    return rf;
  }();
  const double zs[] = {1.5, 2.0};
  const auto rep = exp_full_tail(model, 12, zs, 30000, 13, 0.45, renewal.c0_hat.value,
                                 1.0, renewal, barrier, kPar, 10000);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& row : rep.rows) {
    CHECK(row.feasible);
    CHECK(row.ezz_p > 0.0);
    CHECK(row.ratio_to_c1c0 > 0.0);
    CHECK(row.decomposition.count > 0);
  }
  // Decomposition skipped when its budget is zero.
  const auto lean = exp_full_tail(model, 12, zs, 10000, 13, 0.45,
                                  renewal.c0_hat.value, 1.0, renewal, barrier, kPar, 0);
  CHECK(lean.rows[0].decomposition.count == 0);
}

TEST_CASE("direct and decomposition routes agree up to the crossing deficiency") {
  // The decomposition lower-bounds the tail event; the gap is at most
  // e^{A - z} plus estimator noise, which at A = 0 is a real constraint.
  const auto model = make_binary_gaussian();
  PrunePolicy barrier;
  barrier.mode = PrunePolicy::Mode::Barrier;
  barrier.barrier_offset = 10.0;
  const int n = 12;
  const double z = 2.0, A = 0.0;
  const double zs[] = {z};
  const auto direct = minimum_tail_direct(model, n, zs, 60000, barrier, 15, kPar);
  struct Acc {
    HitAcc any;
    void merge(const Acc& o) { any.merge(o.any); }
  };
  // P(sum B >= 1) via the engine's own tree walk: reuse the decomposition
  // by checking sum_B >= 1 per replication through its mask machinery is
  // internal, so approximate with the killed-union bound instead: the direct
  // probability must dominate the first-crossing one and sit within e^{A-z}.
  RenewalFunction stub;  // the ratio denominator is unused in this check
  stub.grid = {0.0, 1.0};
  stub.values = {1.0, 2.2};
  stub.stderrs = {0.0, 0.0};
  stub.c0_hat = EstimateWithCI{1.2, 0.0, 1, 0, "c0"};
  const auto dec =
      first_crossing_decomposition(model, n, z, A, 60000, 17, stub, barrier, kPar);
  // E[sum B] >= P(sum B >= 1) and P(M_n < a) <= P(sum B >= 1) + e^{A - z}.
  CHECK(direct.rows[0].p_full.value <= dec.sum_B.value + std::exp(A - z) +
                                           4.0 * combined_se(direct.rows[0].p_full.stderr_,
                                                             dec.sum_B.stderr_));
}

TEST_CASE("full tail rejects non-positive z") {
  const auto model = make_binary_gaussian();
  RenewalFunction stub;
  stub.grid = {0.0, 1.0};
  stub.values = {1.0, 2.2};
  stub.stderrs = {0.0, 0.0};
  stub.c0_hat = EstimateWithCI{1.2, 0.0, 1, 0, "c0"};
  const double zs[] = {0.0};
  CHECK_THROWS(exp_full_tail(model, 12, zs, 100, 1, 0.5, 1.2, 0.0, stub));
}

TEST_CASE("plateau point estimates are budget scale-free") {
  // Doubling the replication budget moves the confidence intervals, not the
  // plateau constant: independent-seed runs at B and 2B must agree.
  const auto model = make_binary_gaussian();
  PrunePolicy barrier;
  barrier.mode = PrunePolicy::Mode::Barrier;
  barrier.barrier_offset = 10.0;
  const double zs[] = {1.0, 1.5, 2.0};
  const auto small = exp_killed_tail(model, 12, zs, 60000, 19, barrier, kPar);
  const auto big = exp_killed_tail(model, 12, zs, 120000, 23, barrier, kPar);
  CHECK(std::abs(small.C1_hat.value - big.C1_hat.value) <=
        4.0 * combined_se(small.C1_hat.stderr_, big.C1_hat.stderr_));
}

TEST_CASE("worker count resolves from the environment when unset") {
  setenv("BRWLAB_WORKERS", "3", 1);
  CHECK(ParallelConfig{}.resolved_workers() == 3);
  unsetenv("BRWLAB_WORKERS");
  CHECK(ParallelConfig{5, 1024}.resolved_workers() == 5);
}

TEST_CASE("identity suite passes for the shipped models") {
  SuiteBudgets lean;
  lean.boundary = 60000;
  lean.martingale_trees = 2000;
  lean.martingale_n = 8;
  lean.many_to_one = 60000;
  lean.spine_draws = 10000;
  lean.resample_trees = 2000;
  lean.ladder_budget = 30000;
  lean.ladder_step_cap = 1000000;
  lean.renewal_reps = 60000;
  lean.tanaka_reps = 60000;
  lean.stay_positive_reps = 60000;
  SUBCASE("binary-gaussian") {
    const auto suite = exp_identity_suite(make_binary_gaussian(), 42, lean, kPar);
    for (const auto& c : suite.checks) {
      INFO(c.name, ": ", c.value, " vs ", c.target, " tol ", c.tolerance);
      CHECK(c.pass);
    }
    CHECK(suite.all_pass);
    CHECK(suite.checks.size() >= 12);
  }
  SUBCASE("one-child-zero: degenerate but internally consistent") {
    const auto suite = exp_identity_suite(make_one_child_zero(), 42, lean, kPar);
    for (const auto& c : suite.checks) {
      if (c.name == "supercritical") {
        CHECK_FALSE(c.pass);
        continue;
      }
      INFO(c.name);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("identity suite is deterministic across runs and worker counts") {
  SuiteBudgets tiny;
  tiny.boundary = 20000;
  tiny.martingale_trees = 500;
  tiny.martingale_n = 6;
  tiny.many_to_one = 20000;
  tiny.spine_draws = 4000;
  tiny.resample_trees = 500;
  tiny.ladder_budget = 5000;
  tiny.ladder_step_cap = 200000;
  tiny.renewal_reps = 20000;
  tiny.tanaka_reps = 20000;
  tiny.stay_positive_reps = 20000;
  const auto model = make_binary_gaussian();
  const auto a = exp_identity_suite(model, 7, tiny, ParallelConfig{1, 512});
  const auto b = exp_identity_suite(model, 7, tiny, ParallelConfig{1, 512});
  const auto c = exp_identity_suite(model, 7, tiny, ParallelConfig{8, 512});
  REQUIRE(a.checks.size() == b.checks.size());
  REQUIRE(a.checks.size() == c.checks.size());
  for (size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].value == b.checks[i].value);  // bitwise
    CHECK(a.checks[i].value == c.checks[i].value);
    CHECK(a.checks[i].tolerance == c.checks[i].tolerance);
  }
}
