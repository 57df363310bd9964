#include "brwlab/spine_engine.hpp"

#include <cmath>

namespace brw {

double barrier_d(int n, double zz, double lambda, int k) {
  if (static_cast<double>(k) <= lambda * n) return 0.0;
  return std::max(a_n(n, zz + 1.0), 0.0);
}

namespace {

struct SpineDraw {
  std::vector<double> positions;   // V(w_0)..V(w_n)
  std::vector<double> prefix_min;
  // Sibling positions per generation, flattened with offsets.
  std::vector<double> sibling_pos;
  std::vector<uint32_t> sibling_offset;  // size n+1, group k-1 = [off[k-1], off[k])
};

// Draws the spine path and all sibling broods; no subtrees yet. The sibling
// displacements are part of the spine sigma-algebra and are always drawn
// here, in generation order, so that deferring subtree evolution does not
// perturb the stream.
void draw_spine(const PointProcessModel& model, int n, RngStream& rng, SpineDraw& out,
                std::vector<double>& scratch) {
  out.positions.assign(1, 0.0);
  out.prefix_min.assign(1, 0.0);
  out.sibling_pos.clear();
  out.sibling_offset.assign(1, 0);
  for (int k = 1; k <= n; ++k) {
    const int spine_idx = model.sample_tilted_into(rng, scratch);
    const double parent = out.positions.back();
    const double w_k = parent + scratch[static_cast<size_t>(spine_idx)];
    for (size_t j = 0; j < scratch.size(); ++j) {
      if (static_cast<int>(j) == spine_idx) continue;
      out.sibling_pos.push_back(parent + scratch[j]);
    }
    out.sibling_offset.push_back(static_cast<uint32_t>(out.sibling_pos.size()));
    out.positions.push_back(w_k);
    out.prefix_min.push_back(std::min(out.prefix_min.back(), w_k));
  }
}

bool spine_meets(const PathConstraint& c, const SpineDraw& spine, int n, double z) {
  const double a = a_n(n, z);
  const double w_n = spine.positions.back();
  if (!(w_n >= a - 1.0 && w_n < a)) return false;
  if (c.kind == PathConstraint::Kind::None) return spine.prefix_min.back() >= 0.0;
  for (int k = 0; k <= n; ++k)
    if (spine.positions[static_cast<size_t>(k)] < c.d(k)) return false;
  return true;
}

// Evolves the subtree rooted at every sibling down to generation n with the
// given options, appending generation-n leaves.
void evolve_sibling_subtrees(const PointProcessModel& model, const SpineDraw& spine,
                             int n, const EvolveOptions& opt, RngStream& rng,
                             std::vector<double>& leaf_positions,
                             std::vector<double>& leaf_path_min, PruneLedger& ledger,
                             bool& overflow) {
  thread_local std::vector<double> scratch;
  Frontier cur, next;
  overflow = false;
  for (int k = 1; k <= n; ++k) {
    const uint32_t begin = spine.sibling_offset[static_cast<size_t>(k - 1)];
    const uint32_t end = spine.sibling_offset[static_cast<size_t>(k)];
    if (begin == end) continue;
    const double ancestor_min = spine.prefix_min[static_cast<size_t>(k - 1)];
    cur.generation = k;
    cur.beta = 0.0;
    cur.positions.clear();
    cur.path_min.clear();
    cur.alive_kill0.clear();
    cur.alive_killbeta.clear();
    cur.parent_index.clear();
    for (uint32_t s = begin; s < end; ++s) {
      const double pos = spine.sibling_pos[s];
      const double pmin = std::min(ancestor_min, pos);
      if (pos > opt.barrier_abs) {
        if (opt.track_bias) {
          const double w = std::exp(-pos);
          ledger.weight += w;
          ledger.bound += (1.0 + std::max(pos, 0.0)) * w;
          ++ledger.particles;
        }
        continue;
      }
      if (pmin < opt.drop_path_below) continue;
      cur.positions.push_back(pos);
      cur.path_min.push_back(pmin);
      cur.alive_kill0.push_back(pmin >= 0.0 ? 1 : 0);
      cur.alive_killbeta.push_back(1);
      cur.parent_index.push_back(-1);
    }
    for (int g = k; g < n && cur.size() > 0; ++g) {
      if (!evolve_into(model, cur, next, opt, rng, ledger, scratch)) {
        overflow = true;
        return;
      }
      std::swap(cur, next);
    }
    leaf_positions.insert(leaf_positions.end(), cur.positions.begin(),
                          cur.positions.end());
    leaf_path_min.insert(leaf_path_min.end(), cur.path_min.begin(), cur.path_min.end());
  }
}

}  // namespace

SpineRealization run_spine_tree(const PointProcessModel& model, int n, RngStream& rng,
                                const SpineOptions& options) {
  SpineRealization real;
  real.depth = n;
  SpineDraw spine;
  std::vector<double> scratch;
  draw_spine(model, n, rng, spine, scratch);
  real.spine_positions = spine.positions;
  real.spine_prefix_min = spine.prefix_min;
  for (int k = 1; k <= n; ++k) {
    SpineRealization::SiblingGroup group;
    group.generation = k;
    group.positions.assign(
        spine.sibling_pos.begin() + spine.sibling_offset[static_cast<size_t>(k - 1)],
        spine.sibling_pos.begin() + spine.sibling_offset[static_cast<size_t>(k)]);
    real.siblings.push_back(std::move(group));
  }
  if (!options.evolve_subtrees) return real;

  EvolveOptions opt;
  opt.barrier_abs = barrier_level(options.policy, n);
  opt.track_bias = options.policy.track_bias;
  opt.population_cap = options.population_cap;
  bool overflow = false;
  evolve_sibling_subtrees(model, spine, n, opt, rng, real.leaf_positions,
                          real.leaf_path_min, real.subtree_ledger, overflow);
  real.leaf_positions.push_back(spine.positions.back());
  real.leaf_path_min.push_back(spine.prefix_min.back());
  real.has_tree = true;

  TreeRunStats& st = real.tree_stats;
  st.overflow = overflow;
  st.survived = !real.leaf_positions.empty();
  st.pruned_mass_bound = real.subtree_ledger.bound;
  for (size_t i = 0; i < real.leaf_positions.size(); ++i) {
    const double v = real.leaf_positions[i];
    const double w = std::exp(-v);
    st.W_n += w;
    st.D_n += v * w;
    if (v < st.M_n) st.M_n = v;
    if (real.leaf_path_min[i] >= 0.0 && v < st.M_n_kill) st.M_n_kill = v;
  }
  for (size_t i = 0; i < real.leaf_positions.size(); ++i) {
    if (real.leaf_positions[i] == st.M_n) ++st.argmin_count;
    if (real.leaf_path_min[i] >= 0.0 && real.leaf_positions[i] == st.M_n_kill)
      ++st.argmin_count_kill;
  }
  return real;
}

namespace {

struct KilledMinAcc {
  MeanAcc integrand;
  MeanAcc pruned_weight;
  uint64_t accepted = 0;
  uint64_t spine_was_min = 0;

  void merge(const KilledMinAcc& o) {
    integrand.merge(o.integrand);
    pruned_weight.merge(o.pruned_weight);
    accepted += o.accepted;
    spine_was_min += o.spine_was_min;
  }
};

// Shared core of the window and cumulative estimators. `accept` inspects the
// spine path only; on acceptance the killed subtree minimum is computed and
// the integrand e^{V(w_n)} 1{V(w_n)=M^kill}/#argmin is added.
template <typename Accept>
KilledMinResult killed_min_core(const PointProcessModel& model, int n,
                                uint64_t replications, uint64_t seed,
                                const PrunePolicy& policy, const ParallelConfig& par,
                                const char* tag, Accept accept) {
  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n), tag);
  EvolveOptions opt;
  opt.barrier_abs = barrier_level(policy, n);
  opt.track_bias = policy.track_bias;
  opt.drop_path_below = 0.0;  // only the killed population matters here

  KilledMinAcc acc = run_replications<KilledMinAcc>(
      replications, par, [&](uint64_t rep, KilledMinAcc& a) {
        thread_local SpineDraw spine;
        thread_local std::vector<double> scratch, leaves, leaf_min;
        RngStream rng(scope, rep);
        draw_spine(model, n, rng, spine, scratch);
        if (!accept(spine)) {
          a.integrand.add(0.0);
          return;
        }
        ++a.accepted;
        leaves.clear();
        leaf_min.clear();
        PruneLedger ledger;
        bool overflow = false;
        evolve_sibling_subtrees(model, spine, n, opt, rng, leaves, leaf_min, ledger,
                                overflow);
        if (overflow) throw ModelError("killed_min_estimator: population cap exceeded");
        a.pruned_weight.add(ledger.weight);
        const double w_n = spine.positions.back();
        // Leaves kept by the drop rule all have path min >= 0; the spine leaf
        // is killed as well because the accepted path stays >= 0.
        double m_kill = w_n;
        for (double v : leaves) m_kill = std::min(m_kill, v);
        if (w_n > m_kill) {
          a.integrand.add(0.0);
          return;
        }
        int count = 1;  // the spine leaf
        for (double v : leaves)
          if (v == m_kill) ++count;
        ++a.spine_was_min;
        a.integrand.add(std::exp(w_n) / static_cast<double>(count));
      });

  KilledMinResult result;
  result.n = n;
  result.replications = replications;
  result.accepted = acc.accepted;
  result.spine_was_min = acc.spine_was_min;
  result.mean_pruned_weight = acc.pruned_weight.n ? acc.pruned_weight.mean() : 0.0;
  result.estimate = acc.integrand.estimate(seed, tag);
  return result;
}

}  // namespace

KilledMinResult killed_min_estimator(const PointProcessModel& model, int n, double z,
                                     double L, PathConstraint::Kind kind,
                                     uint64_t replications, uint64_t seed,
                                     const PrunePolicy& policy,
                                     const ParallelConfig& par) {
  if (z < 0.0 || L < 0.0) throw ModelError("killed_min_estimator: z, L >= 0 required");
  PathConstraint constraint;
  constraint.kind = kind;
  constraint.z = z;
  constraint.L = L;
  constraint.n = n;
  KilledMinResult result = killed_min_core(
      model, n, replications, seed, policy, par, "spine-killed-window",
      [&](const SpineDraw& spine) { return spine_meets(constraint, spine, n, z); });
  result.z = z;
  result.L = L;
  result.estimate.estimator_kind = "spine";
  return result;
}

KilledMinResult killed_tail_estimator(const PointProcessModel& model, int n, double z,
                                      uint64_t replications, uint64_t seed,
                                      const PrunePolicy& policy,
                                      const ParallelConfig& par) {
  const double a = a_n(n, z);
  KilledMinResult result = killed_min_core(
      model, n, replications, seed, policy, par, "spine-killed-tail",
      [&](const SpineDraw& spine) {
        return spine.prefix_min.back() >= 0.0 && spine.positions.back() < a;
      });
  result.z = z;
  result.estimate.estimator_kind = "spine";
  return result;
}

GoodVertexReport good_vertex_diagnostic(const SpineRealization& real, double z, double L,
                                        double B) {
  const int n = real.depth;
  GoodVertexReport report;
  report.ok.assign(static_cast<size_t>(n), 1);
  for (int k = 1; k <= n; ++k) {
    const double dk = barrier_d(n, z + L, 0.5, k);
    const double ek = k <= n / 2 ? std::pow(static_cast<double>(k), 1.0 / 12.0)
                                 : std::pow(static_cast<double>(n - k), 1.0 / 12.0);
    double sum = 0.0;
    for (double v : real.siblings[static_cast<size_t>(k - 1)].positions) {
      const double rel = v - dk;
      sum += std::exp(-rel) * (1.0 + std::max(rel, 0.0));
    }
    if (!(sum <= B * std::exp(-ek))) {
      report.ok[static_cast<size_t>(k - 1)] = 0;
      if (report.first_violation < 0) report.first_violation = k;
      report.all_ok = false;
    }
  }
  return report;
}

EstimateWithCI good_vertex_frequency(const PointProcessModel& model, int n, double z,
                                     double L, double B, uint64_t replications,
                                     uint64_t seed, const ParallelConfig& par) {
  PathConstraint constraint;
  constraint.kind = PathConstraint::Kind::ZzL;
  constraint.z = z;
  constraint.L = L;
  constraint.n = n;
  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n), "good-vertex");
  struct Acc {
    HitAcc good;
    void merge(const Acc& o) { good.merge(o.good); }
  };
  SpineOptions options;  // spine only, no subtrees
  Acc acc = run_replications<Acc>(replications, par, [&](uint64_t rep, Acc& a) {
    RngStream rng(scope, rep);
    SpineRealization real = run_spine_tree(model, n, rng, options);
    SpineDraw spine;
    spine.positions = real.spine_positions;
    spine.prefix_min = real.spine_prefix_min;
    if (!spine_meets(constraint, spine, n, z)) return;
    a.good.add(good_vertex_diagnostic(real, z, L, B).all_ok);
  });
  return acc.good.estimate(seed, "good_vertex_frequency");
}

double conditioned_spine_step(const WalkModel& walk, const RenewalFunction& renewal,
                              double x, double beta, RngStream& rng,
                              ConditionedStepLog* log) {
  if (x < -beta) throw ModelError("conditioned_spine_step: x below the kill level");
  thread_local std::vector<double> scratch;
  const double denom = renewal.eval(x + beta);
  double width = 12.0;
  for (;;) {
    double envelope = renewal.eval(x + beta + width * walk.sigma()) / denom;
    const double y = x + walk.step(rng, scratch);
    if (log) ++log->proposals;
    const double weight = y >= -beta ? renewal.eval(y + beta) / denom : 0.0;
    if (weight > envelope) {
      // R is non-decreasing, so a breach means the proposal jumped past the
      // envelope window; widen and re-sample.
      if (log) ++log->envelope_breaches;
      width *= 2.0;
      continue;
    }
    if (rng.next_unit() * envelope < weight) {
      if (log) log->envelope_width_sigmas = width;
      return y;
    }
  }
}

namespace {

struct DecompAcc {
  MeanAcc sum_b, sum_b_tame, members, pruned_weight;
  uint64_t mask_overflow = 0;

  void merge(const DecompAcc& o) {
    sum_b.merge(o.sum_b);
    sum_b_tame.merge(o.sum_b_tame);
    members.merge(o.members);
    pruned_weight.merge(o.pruned_weight);
    mask_overflow += o.mask_overflow;
  }
};

struct Mask128 {
  uint64_t lo = 0, hi = 0;
  void set(int bit) { (bit < 64 ? lo : hi) |= 1ULL << (bit & 63); }
  Mask128 operator&(const Mask128& o) const { return {lo & o.lo, hi & o.hi}; }
  Mask128 operator|(const Mask128& o) const { return {lo | o.lo, hi | o.hi}; }
  int popcount() const { return __builtin_popcountll(lo) + __builtin_popcountll(hi); }
  bool test(int bit) const { return ((bit < 64 ? lo : hi) >> (bit & 63)) & 1ULL; }
};

}  // namespace

DecompositionReport first_crossing_decomposition(const PointProcessModel& model, int n,
                                                 double z, double A,
                                                 uint64_t replications, uint64_t seed,
                                                 const RenewalFunction& renewal,
                                                 const PrunePolicy& policy,
                                                 const ParallelConfig& par) {
  if (!(z >= A && A >= 0.0))
    throw ModelError("first_crossing_decomposition: need z >= A >= 0");
  const double r = z - A;        // S^r depth
  const double floor_level = -r; // particles below this are irrelevant
  const double target = a_n(n, z);
  const int member_horizon = static_cast<int>(std::sqrt(static_cast<double>(n)));
  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n), "decomposition");

  EvolveOptions opt;
  opt.barrier_abs = barrier_level(policy, n);
  opt.track_bias = policy.track_bias;

  DecompAcc acc = run_replications<DecompAcc>(
      replications, par, [&](uint64_t rep, DecompAcc& a) {
        RngStream rng(scope, rep);
        thread_local std::vector<double> scratch;
        // Per-particle state. mask bit m: this particle descends from member
        // m and its path since m stayed >= V(member m).
        thread_local std::vector<double> pos, pmin, npos, npmin;
        thread_local std::vector<Mask128> mask, nmask;
        thread_local std::vector<uint8_t> tame, ntame;
        thread_local std::vector<double> member_level;
        thread_local std::vector<uint8_t> member_tame;
        pos.assign(1, 0.0);
        pmin.assign(1, kInf);  // strict-ancestor minimum: empty for the root
        mask.assign(1, Mask128{});
        tame.assign(1, 1);
        member_level.clear();
        member_tame.clear();
        bool mask_overflow = false;

        // Root membership: min over the empty ancestor set is +inf, so the
        // root is in S^r whenever 0 >= -r.
        if (0.0 >= floor_level) {
          member_level.push_back(0.0);
          member_tame.push_back(1);
          mask[0].set(0);
        }

        PruneLedger ledger;
        for (int gen = 1; gen <= n && !pos.empty(); ++gen) {
          npos.clear();
          npmin.clear();
          nmask.clear();
          ntame.clear();
          const bool registering = gen <= member_horizon;
          for (size_t i = 0; i < pos.size(); ++i) {
            const uint32_t nc = model.sample_into(rng, scratch);
            const double parent_pos = pos[i];
            const double ancestor_min = std::min(pmin[i], parent_pos);
            double brood_xi_base = 0.0;  // sum over brood of (1+d+) e^-d
            if (registering) {
              for (uint32_t j = 0; j < nc; ++j) {
                const double d = scratch[j];
                brood_xi_base += (1.0 + std::max(d, 0.0)) * std::exp(-d);
              }
            }
            for (uint32_t j = 0; j < nc; ++j) {
              const double child = parent_pos + scratch[j];
              if (child > opt.barrier_abs) {
                if (opt.track_bias) {
                  const double w = std::exp(-child);
                  ledger.weight += w;
                  ledger.bound += (1.0 + std::max(child, 0.0)) * w;
                  ++ledger.particles;
                }
                continue;
              }
              if (std::min(ancestor_min, child) < floor_level) continue;
              Mask128 cmask;
              // Keep member bits whose floor the child still clears.
              if (mask[i].lo | mask[i].hi) {
                for (size_t m = 0; m < member_level.size(); ++m)
                  if (mask[i].test(static_cast<int>(m)) && child >= member_level[m])
                    cmask.set(static_cast<int>(m));
              }
              uint8_t ctame = tame[i];
              if (registering) {
                // xi(child) excludes the child itself from its brood sum.
                const double self = (1.0 + std::max(scratch[j], 0.0)) *
                                    std::exp(-scratch[j]);
                const double xi = brood_xi_base - self;
                if (!(xi < std::exp(0.5 * (parent_pos + r)))) ctame = 0;
                const bool new_min = child < ancestor_min && child >= floor_level;
                if (new_min) {
                  if (member_level.size() >= 128) {
                    mask_overflow = true;
                  } else {
                    const int id = static_cast<int>(member_level.size());
                    member_level.push_back(child);
                    member_tame.push_back(ctame);
                    cmask.set(id);
                  }
                }
              }
              npos.push_back(child);
              npmin.push_back(ancestor_min);
              nmask.push_back(cmask);
              ntame.push_back(ctame);
            }
          }
          std::swap(pos, npos);
          std::swap(pmin, npmin);
          std::swap(mask, nmask);
          std::swap(tame, ntame);
        }

        Mask128 hit;
        for (size_t i = 0; i < pos.size(); ++i)
          if (pos[i] < target) hit = hit | mask[i];
        Mask128 tame_mask;
        for (size_t m = 0; m < member_level.size(); ++m)
          if (member_tame[m]) tame_mask.set(static_cast<int>(m));
        a.sum_b.add(static_cast<double>(hit.popcount()));
        a.sum_b_tame.add(static_cast<double>((hit & tame_mask).popcount()));
        a.members.add(static_cast<double>(member_level.size()));
        a.pruned_weight.add(ledger.weight);
        if (mask_overflow) ++a.mask_overflow;
      });

  DecompositionReport report;
  report.n = n;
  report.z = z;
  report.A = A;
  report.replications = replications;
  report.sum_B = acc.sum_b.estimate(seed, "decomposition");
  report.sum_B_tame = acc.sum_b_tame.estimate(seed, "decomposition_tame");
  report.renewal_value = renewal.eval(r);
  report.renewal_se = renewal.se_at(r);
  const double ez = std::exp(z);
  report.ratio = ez * report.sum_B.value / report.renewal_value;
  const double rel =
      std::sqrt(std::pow(report.sum_B.stderr_ / std::max(report.sum_B.value, 1e-300), 2) +
                std::pow(report.renewal_se / report.renewal_value, 2));
  report.ratio_se = std::abs(report.ratio) * rel;
  report.mean_members = acc.members.mean();
  report.mask_overflows = acc.mask_overflow;
  report.mean_pruned_weight = acc.pruned_weight.mean();
  return report;
}

}  // namespace brw
