#include "brwlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace brw {

namespace {

struct LimitAcc {
  std::vector<double> m_low, d_low, m_high, d_high;
  uint64_t dead = 0;

  void merge(const LimitAcc& o) {
    m_low.insert(m_low.end(), o.m_low.begin(), o.m_low.end());
    d_low.insert(d_low.end(), o.d_low.begin(), o.d_low.end());
    m_high.insert(m_high.end(), o.m_high.begin(), o.m_high.end());
    d_high.insert(d_high.end(), o.d_high.begin(), o.d_high.end());
    dead += o.dead;
  }
};

double mean_exp_mixture(const std::vector<double>& d_trunc, double c, double ex) {
  double s = 0.0;
  for (double d : d_trunc) s += std::exp(-c * ex * d);
  return s / static_cast<double>(d_trunc.size());
}

// Solves mean exp(-C * d) = target for C >= 0; the left side is decreasing.
double fit_mixture_constant(const std::vector<double>& d_trunc, double target,
                            bool& flagged) {
  if (target >= 1.0) return 0.0;
  double hi = 1.0;
  while (mean_exp_mixture(d_trunc, hi, 1.0) > target) {
    hi *= 2.0;
    if (hi > 1e12) {
      flagged = true;  // some trees carry zero mass, the target is unreachable
      return hi;
    }
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_exp_mixture(d_trunc, mid, 1.0) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

LimitLawReport build_limit_report(int n, std::span<const double> x_grid,
                                  const std::vector<double>& m,
                                  const std::vector<double>& d, uint64_t dead,
                                  uint64_t seed) {
  LimitLawReport rep;
  rep.n = n;
  rep.seed = seed;
  rep.replications = m.size() + dead;
  rep.dead_trees = dead;
  rep.x_grid.assign(x_grid.begin(), x_grid.end());
  if (m.empty() || m.size() < 10) {
    rep.flagged = true;
    return rep;
  }
  const double center = recentering(n);
  std::vector<double> d_trunc(d.size());
  for (size_t i = 0; i < d.size(); ++i) d_trunc[i] = std::max(d[i], 0.0);

  const double total = static_cast<double>(m.size());
  double survival0 = 0.0;
  for (double mi : m)
    if (mi >= center) survival0 += 1.0;
  survival0 /= total;
  rep.C_hat = fit_mixture_constant(d_trunc, survival0, rep.flagged);

  for (double x : x_grid) {
    const double ex = std::exp(x);
    uint64_t hits = 0;
    for (double mi : m)
      if (mi >= center + x) ++hits;
    const double surv = static_cast<double>(hits) / total;
    rep.empirical_survival.push_back(surv);
    rep.empirical_se.push_back(std::sqrt(surv * (1.0 - surv) / total));
    MeanAcc mix;
    for (double dt : d_trunc) mix.add(std::exp(-rep.C_hat * ex * dt));
    rep.mixture_prediction.push_back(mix.mean());
    rep.mixture_se.push_back(mix.stderr_());
    rep.sup_distance = std::max(rep.sup_distance, std::abs(surv - mix.mean()));
  }
  return rep;
}

}  // namespace

std::pair<LimitLawReport, LimitLawReport> exp_limit_law_paired(
    const PointProcessModel& model, int n_low, int n_high,
    std::span<const double> x_grid, uint64_t replications, uint64_t seed,
    const ParallelConfig& par, size_t population_cap) {
  if (n_low > n_high || n_high > 18)
    throw ModelError("exp_limit_law: need n_low <= n_high <= 18 for exact D tracking");
  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n_high), "limit-law");

  LimitAcc acc = run_replications<LimitAcc>(
      replications, par, [&](uint64_t rep, LimitAcc& a) {
        RngStream rng(scope, rep);
        thread_local std::vector<double> scratch;
        Frontier cur = Frontier::root();
        Frontier next;
        EvolveOptions opt;  // exact: no pruning, no drops
        opt.population_cap = population_cap;
        PruneLedger ledger;
        double ml = kInf, dl = 0.0;
        for (int g = 0; g < n_high; ++g) {
          if (g == n_low) {
            for (size_t i = 0; i < cur.size(); ++i) {
              ml = std::min(ml, cur.positions[i]);
              dl += cur.positions[i] * std::exp(-cur.positions[i]);
            }
          }
          if (!evolve_into(model, cur, next, opt, rng, ledger, scratch))
            throw ModelError("exp_limit_law: population cap exceeded");
          std::swap(cur, next);
          if (cur.size() == 0) break;
        }
        if (cur.size() == 0) {
          ++a.dead;
          return;
        }
        if (n_low == n_high) {
          ml = kInf;
          dl = 0.0;
          for (size_t i = 0; i < cur.size(); ++i) {
            ml = std::min(ml, cur.positions[i]);
            dl += cur.positions[i] * std::exp(-cur.positions[i]);
          }
        } else if (n_low == 0) {
          ml = 0.0;
          dl = 0.0;
        }
        double mh = kInf, dh = 0.0;
        for (size_t i = 0; i < cur.size(); ++i) {
          mh = std::min(mh, cur.positions[i]);
          dh += cur.positions[i] * std::exp(-cur.positions[i]);
        }
        a.m_low.push_back(ml);
        a.d_low.push_back(dl);
        a.m_high.push_back(mh);
        a.d_high.push_back(dh);
      });

  return {build_limit_report(n_low, x_grid, acc.m_low, acc.d_low, acc.dead, seed),
          build_limit_report(n_high, x_grid, acc.m_high, acc.d_high, acc.dead, seed)};
}

LimitLawReport exp_limit_law(const PointProcessModel& model, int n,
                             std::span<const double> x_grid, uint64_t replications,
                             uint64_t seed, const ParallelConfig& par,
                             size_t population_cap) {
  return exp_limit_law_paired(model, n, n, x_grid, replications, seed, par,
                              population_cap)
      .second;
}

namespace {

struct KilledTailAcc {
  std::vector<MeanAcc> cum, window;
  MeanAcc pruned_weight;
  uint64_t accepted = 0;

  void merge(const KilledTailAcc& o) {
    if (cum.empty()) {
      cum = o.cum;
      window = o.window;
    } else if (!o.cum.empty()) {
      for (size_t i = 0; i < cum.size(); ++i) {
        cum[i].merge(o.cum[i]);
        window[i].merge(o.window[i]);
      }
    }
    pruned_weight.merge(o.pruned_weight);
    accepted += o.accepted;
  }
};

}  // namespace

TailReport exp_killed_tail(const PointProcessModel& model, int n,
                           std::span<const double> z_grid, uint64_t budget,
                           uint64_t seed, const PrunePolicy& policy,
                           const ParallelConfig& par, size_t population_cap) {
  const double top = recentering(n);
  std::vector<double> zs(z_grid.begin(), z_grid.end());
  if (!std::is_sorted(zs.begin(), zs.end()))
    throw ModelError("exp_killed_tail: z grid must be ascending");
  for (double z : zs)
    if (!(z > 0.0 && z < top))
      throw ModelError("exp_killed_tail: z grid must lie in (0, (3/2) ln n)");
  const size_t nz = zs.size();
  const double a_widest = a_n(n, zs.front());

  EvolveOptions opt;
  opt.barrier_abs = barrier_level(policy, n);
  opt.track_bias = policy.track_bias;
  opt.drop_path_below = 0.0;
  opt.population_cap = population_cap;

  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n), "killed-tail");
  KilledTailAcc acc = run_replications<KilledTailAcc>(
      budget, par, [&](uint64_t rep, KilledTailAcc& a) {
        if (a.cum.empty()) {
          a.cum.resize(nz);
          a.window.resize(nz);
        }
        RngStream rng(scope, rep);
        thread_local std::vector<double> scratch, leaves, leaf_min;
        thread_local SpineRealization real;
        SpineOptions so;  // spine only; subtrees evolved manually when accepted
        real = run_spine_tree(model, n, rng, so);
        const double w_n = real.spine_positions.back();
        const bool accept = real.spine_prefix_min.back() >= 0.0 && w_n < a_widest;
        if (!accept) {
          for (size_t i = 0; i < nz; ++i) {
            a.cum[i].add(0.0);
            a.window[i].add(0.0);
          }
          return;
        }
        ++a.accepted;
        // Evolve the killed sibling subtrees to find the killed minimum.
        leaves.clear();
        leaf_min.clear();
        Frontier cur, next;
        PruneLedger ledger;
        for (const auto& group : real.siblings) {
          if (group.positions.empty()) continue;
          const int k = group.generation;
          const double anc_min = real.spine_prefix_min[static_cast<size_t>(k - 1)];
          cur.generation = k;
          cur.positions.clear();
          cur.path_min.clear();
          cur.alive_kill0.clear();
          cur.alive_killbeta.clear();
          cur.parent_index.clear();
          for (double pos : group.positions) {
            const double pmin = std::min(anc_min, pos);
            if (pos > opt.barrier_abs || pmin < 0.0) {
              if (pos > opt.barrier_abs && opt.track_bias) {
                const double w = std::exp(-pos);
                ledger.weight += w;
                ledger.bound += (1.0 + std::max(pos, 0.0)) * w;
                ++ledger.particles;
              }
              continue;
            }
            cur.positions.push_back(pos);
            cur.path_min.push_back(pmin);
            cur.alive_kill0.push_back(1);
            cur.alive_killbeta.push_back(1);
            cur.parent_index.push_back(-1);
          }
          for (int g = k; g < n && cur.size() > 0; ++g) {
            if (!evolve_into(model, cur, next, opt, rng, ledger, scratch))
              throw ModelError("exp_killed_tail: population cap exceeded");
            std::swap(cur, next);
          }
          leaves.insert(leaves.end(), cur.positions.begin(), cur.positions.end());
        }
        a.pruned_weight.add(ledger.weight);
        double m_kill = w_n;
        for (double v : leaves) m_kill = std::min(m_kill, v);
        double integrand = 0.0;
        if (w_n <= m_kill) {
          int count = 1;
          for (double v : leaves)
            if (v == m_kill) ++count;
          integrand = std::exp(w_n) / static_cast<double>(count);
        }
        for (size_t i = 0; i < nz; ++i) {
          const double a_i = a_n(n, zs[i]);
          a.cum[i].add(w_n < a_i ? integrand : 0.0);
          const double lo = std::max(a_i - 1.0, 0.0);
          a.window[i].add(w_n >= lo && w_n < a_i ? integrand : 0.0);
        }
      });

  TailReport report;
  report.n = n;
  report.replications = budget;
  report.seed = seed;
  report.accepted = acc.accepted;
  report.mean_pruned_weight = acc.pruned_weight.n ? acc.pruned_weight.mean() : 0.0;
  for (size_t i = 0; i < nz; ++i) {
    KilledTailRow row;
    row.z = zs[i];
    row.p_cum = acc.cum[i].estimate(seed, "spine");
    row.p_window = acc.window[i].estimate(seed, "spine_window");
    const double ez = std::exp(row.z);
    row.ez_p = ez * row.p_cum.value;
    row.ez_p_se = ez * row.p_cum.stderr_;
    row.ez_window = ez * row.p_window.value;
    row.ez_window_se = ez * row.p_window.stderr_;
    report.rows.push_back(row);
  }
  // Plateau over the upper half of the grid.
  const size_t half = nz / 2;
  double lo = kInf, hi = -kInf;
  MeanAcc c1_values;
  double c1_var = 0.0;
  size_t c1_count = 0;
  for (size_t i = half; i < nz; ++i) {
    lo = std::min(lo, report.rows[i].ez_p);
    hi = std::max(hi, report.rows[i].ez_p);
    c1_values.add(report.rows[i].ez_p);
    c1_var += report.rows[i].ez_p_se * report.rows[i].ez_p_se;
    ++c1_count;
  }
  report.plateau_ratio = lo > 0.0 ? hi / lo : kInf;
  report.C1_hat = EstimateWithCI{
      c1_values.mean(), std::sqrt(c1_var) / static_cast<double>(c1_count),
      budget, seed, "C1_hat"};
  return report;
}

FullTailReport exp_full_tail(const PointProcessModel& model, int n,
                             std::span<const double> z_grid, uint64_t budget,
                             uint64_t seed, double C1_hat, double c0_hat, double A,
                             const RenewalFunction& renewal, const PrunePolicy& policy,
                             const ParallelConfig& par, uint64_t decomposition_budget) {
  for (double z : z_grid)
    if (!(z > 0.0)) throw ModelError("exp_full_tail: z grid must be positive");
  FullTailReport report;
  report.n = n;
  report.A = A;
  report.replications = budget;
  report.seed = seed;
  report.c1_c0 = C1_hat * c0_hat;

  TailTable direct = minimum_tail_direct(model, n, z_grid, budget, policy, seed, par);
  for (size_t i = 0; i < z_grid.size(); ++i) {
    FullTailRow row;
    row.z = z_grid[i];
    row.feasible = direct.rows[i].feasible;
    row.p_direct = direct.rows[i].p_full;
    row.p_kill_direct = direct.rows[i].p_kill;
    row.ezz_p = direct.rows[i].ezz_pfull;
    row.ezz_p_se = direct.rows[i].ezz_pfull_se;
    if (row.feasible && report.c1_c0 > 0.0) {
      row.ratio_to_c1c0 = row.ezz_p / report.c1_c0;
      row.ratio_se = row.ezz_p_se / report.c1_c0;
    }
    if (row.z >= A && decomposition_budget > 0) {
      DecompositionReport dec = first_crossing_decomposition(
          model, n, row.z, A, decomposition_budget, seed, renewal, policy, par);
      row.decomposition = EstimateWithCI{dec.ratio, dec.ratio_se, dec.replications,
                                         seed, "decomposition"};
    }
    report.rows.push_back(row);
  }
  return report;
}

MartingaleVariance analytic_martingale_variance(const PointProcessModel& model, int n) {
  if (!model.is_gaussian_iid() && model.family != ModelFamily::OneChildZero)
    throw ModelError("analytic_martingale_variance: Gaussian i.i.d. models only");
  if (model.family == ModelFamily::OneChildZero) return {0.0, 0.0};
  const double mu = model.mu0, s2 = model.s2;
  double en, en2f;
  if (model.family == ModelFamily::BinaryGaussian) {
    en = model.fixed_children;
    en2f = en * (en - 1.0);
  } else {
    en = 1.0 + model.poisson_m;
    en2f = model.poisson_m * model.poisson_m + 2.0 * model.poisson_m;
  }
  const double g1 = std::exp(-mu + 0.5 * s2);
  const double g2 = std::exp(-2.0 * mu + 2.0 * s2);
  const double p2 = en * g2;
  const double q1 = en * (mu - 2.0 * s2) * g2;
  const double q2 = en * ((mu - 2.0 * s2) * (mu - 2.0 * s2) + s2) * g2;
  const double r00 = en2f * g1 * g1;
  const double r01 = en2f * g1 * g1 * (mu - s2);
  const double r11 = en2f * g1 * g1 * (mu - s2) * (mu - s2);
  // Second-moment recursion for (W, D); the means are 1 and 0 in the
  // boundary case.
  double a = 1.0, b = 0.0, d = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a_next = p2 * a + r00;
    const double b_next = p2 * b + q1 * a + r01;
    const double d_next = p2 * d + 2.0 * q1 * b + q2 * a + r11;
    a = a_next;
    b = b_next;
    d = d_next;
  }
  return {a - 1.0, d};
}

namespace {

struct MartingaleAcc {
  MeanAcc w, d, dbeta;
  void merge(const MartingaleAcc& o) {
    w.merge(o.w);
    d.merge(o.d);
    dbeta.merge(o.dbeta);
  }
};

struct PairAcc {
  MeanAcc tree, walk, paired;
  void merge(const PairAcc& o) {
    tree.merge(o.tree);
    walk.merge(o.walk);
    paired.merge(o.paired);
  }
};

SuiteCheck se_check(const std::string& name, double value, double target, double se,
                    double zscore = 4.0, const std::string& detail = {}) {
  SuiteCheck c;
  c.name = name;
  c.value = value;
  c.target = target;
  c.tolerance = zscore * se;
  c.pass = std::abs(value - target) <= c.tolerance;
  c.detail = detail;
  return c;
}

}  // namespace

SuiteReport exp_identity_suite(const PointProcessModel& model, uint64_t seed,
                               const SuiteBudgets& budgets, const ParallelConfig& par) {
  SuiteReport suite;
  suite.model_name = model.name;
  suite.model_hash = model.hash();
  suite.seed = seed;

  // Boundary moments.
  const ModelReport boundary = check_boundary_conditions(model, budgets.boundary, seed, par);
  suite.add(se_check("boundary_weight", boundary.mean_weight.value, 1.0,
                     boundary.mean_weight.stderr_));
  suite.add(se_check("boundary_derivative", boundary.mean_vweight.value, 0.0,
                     boundary.mean_vweight.stderr_));
  {
    SuiteCheck c;
    c.name = "supercritical";
    c.value = boundary.mean_children.value;
    c.target = 1.0;
    c.tolerance = 4.0 * boundary.mean_children.stderr_;
    c.pass = boundary.supercritical_pass;
    suite.add(c);
  }
  if (model.analytic)
    suite.add(se_check("sigma_sq", boundary.sigma_sq.value, model.analytic->sigma_sq,
                       boundary.sigma_sq.stderr_));

  const WalkModel walk = derive_walk(model);
  const bool degenerate = walk.kind == WalkModel::Kind::Zero;

  // Renewal machinery (skipped for the degenerate walk, which has no ladder).
  LadderTable ladder;
  RenewalFunction renewal;
  if (!degenerate) {
    ladder = build_ladder_table(walk, budgets.ladder_budget, seed,
                                budgets.ladder_step_cap, par);
    renewal = estimate_renewal(ladder, false, 25.0, 0.05, budgets.renewal_reps, seed, par);
  }

  // Martingale means at n = martingale_n over martingale_trees trees.
  {
    const int n = budgets.martingale_n;
    const double beta = 1.0;
    const uint64_t scope = scoped_seed(seed, "suite-martingale");
    const RenewalFunction* rf = degenerate ? nullptr : &renewal;
    MartingaleAcc acc = run_replications<MartingaleAcc>(
        budgets.martingale_trees, par, [&](uint64_t rep, MartingaleAcc& a) {
          RngStream rng(scope, rep);
          TreeRunStats st = run_tree(model, n, beta, PrunePolicy{}, rng, rf);
          a.w.add(st.W_n);
          a.d.add(st.D_n);
          if (rf) a.dbeta.add(st.D_n_beta);
        });
    double se_w = acc.w.stderr_(), se_d = acc.d.stderr_();
    std::string detail;
    if (model.is_gaussian_iid()) {
      // The empirical SE of the heavy-tailed W_n underestimates; use the
      // closed-form variance as the oracle standard error.
      const MartingaleVariance mv = analytic_martingale_variance(model, n);
      se_w = std::sqrt(mv.var_w / static_cast<double>(acc.w.n));
      se_d = std::sqrt(mv.var_d / static_cast<double>(acc.d.n));
      detail = "analytic variance oracle";
    }
    suite.add(se_check("martingale_W", acc.w.mean(), 1.0, se_w, 4.0, detail));
    suite.add(se_check("martingale_D", acc.d.mean(), 0.0, se_d, 4.0, detail));
    if (!degenerate) {
      const double target = renewal.eval(beta);
      const double se = combined_se(acc.dbeta.stderr_(), renewal.se_at(beta));
      suite.add(se_check("martingale_D_beta", acc.dbeta.mean(), target, se));
    }
  }

  // Many-to-one at n = 3 with g = 1{V <= 0}: tree side vs walk side.
  {
    const int n = 3;
    const uint64_t scope = scoped_seed(seed, "suite-many-to-one");
    PairAcc acc = run_replications<PairAcc>(
        budgets.many_to_one, par, [&](uint64_t rep, PairAcc& a) {
          RngStream rng(scope, rep);
          thread_local std::vector<double> scratch;
          Frontier cur = Frontier::root();
          Frontier next;
          EvolveOptions opt;
          PruneLedger ledger;
          for (int g = 0; g < n && cur.size() > 0; ++g) {
            evolve_into(model, cur, next, opt, rng, ledger, scratch);
            std::swap(cur, next);
          }
          double count = 0.0;
          for (double v : cur.positions)
            if (v <= 0.0) count += 1.0;
          a.tree.add(count);
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += walk.step(rng, scratch);
          a.walk.add(s <= 0.0 ? std::exp(s) : 0.0);
        });
    const double se = combined_se(acc.tree.stderr_(), acc.walk.stderr_());
    suite.add(se_check("many_to_one_tree_vs_walk", acc.tree.mean(), acc.walk.mean(), se));
    if (model.family == ModelFamily::BinaryGaussian && model.fixed_children == 2) {
      const double target = 8.0 * normal_cdf(-std::sqrt(6.0 * std::log(2.0)));
      suite.add(se_check("many_to_one_closed_form", acc.tree.mean(), target,
                         acc.tree.stderr_()));
    }
  }

  // Killed many-to-one at n = 2 with g = 1{path >= 0, V <= 1}.
  {
    const int n = 2;
    const double r = 1.0;
    const uint64_t scope = scoped_seed(seed, "suite-many-to-one-kill");
    PairAcc acc = run_replications<PairAcc>(
        budgets.many_to_one, par, [&](uint64_t rep, PairAcc& a) {
          RngStream rng(scope, rep);
          thread_local std::vector<double> scratch;
          Frontier cur = Frontier::root();
          Frontier next;
          EvolveOptions opt;
          PruneLedger ledger;
          for (int g = 0; g < n && cur.size() > 0; ++g) {
            evolve_into(model, cur, next, opt, rng, ledger, scratch);
            std::swap(cur, next);
          }
          double count = 0.0;
          for (size_t i = 0; i < cur.size(); ++i)
            if (cur.alive_kill0[i] && cur.positions[i] <= r) count += 1.0;
          a.tree.add(count);
          double s = 0.0;
          bool alive = true;
          for (int k = 0; k < n; ++k) {
            s += walk.step(rng, scratch);
            if (s < 0.0) alive = false;
          }
          a.walk.add(alive && s <= r ? std::exp(s) : 0.0);
        });
    const double se = combined_se(acc.tree.stderr_(), acc.walk.stderr_());
    suite.add(se_check("many_to_one_killed", acc.tree.mean(), acc.walk.mean(), se));
  }

  // Spine marginal: V(w_n) has the centered walk law.
  if (!degenerate && model.is_gaussian_iid()) {
    const int n = budgets.spine_n;
    const uint64_t scope = scoped_seed(seed, "suite-spine-ks");
    struct Acc {
      std::vector<double> w;
      void merge(const Acc& o) { w.insert(w.end(), o.w.begin(), o.w.end()); }
    };
    Acc acc = run_replications<Acc>(budgets.spine_draws, par, [&](uint64_t rep, Acc& a) {
      RngStream rng(scope, rep);
      SpineRealization real = run_spine_tree(model, n, rng);
      a.w.push_back(real.spine_positions.back());
    });
    const double sd = std::sqrt(static_cast<double>(n) * walk.sigma_sq);
    const KsResult ks = ks_test(acc.w, [&](double x) { return normal_cdf(x / sd); });
    SuiteCheck c;
    c.name = "spine_marginal_ks";
    c.value = ks.p_value;
    c.target = 0.01;
    c.tolerance = 0.0;
    c.pass = ks.p_value > 0.01;
    std::ostringstream os;
    os << "D=" << ks.statistic;
    c.detail = os.str();
    suite.add(c);
  }

  // Spine selection: a leaf re-sampled with weight e^-V / W_n coincides with
  // the spine exactly as often as the conditional identity predicts. The
  // paired difference has conditional mean zero tree by tree.
  {
    const int n = budgets.resample_n;
    const uint64_t scope = scoped_seed(seed, "suite-spine-select");
    struct Acc {
      MeanAcc diff;
      void merge(const Acc& o) { diff.merge(o.diff); }
    };
    SpineOptions so;
    so.evolve_subtrees = true;
    Acc acc = run_replications<Acc>(
        budgets.resample_trees, par, [&](uint64_t rep, Acc& a) {
          RngStream rng(scope, rep);
          SpineRealization real = run_spine_tree(model, n, rng, so);
          const size_t spine_leaf = real.leaf_positions.size() - 1;
          double w_sum = 0.0;
          for (double v : real.leaf_positions) w_sum += std::exp(-v);
          double u = rng.next_unit() * w_sum;
          size_t pick = real.leaf_positions.size() - 1;
          for (size_t i = 0; i < real.leaf_positions.size(); ++i) {
            u -= std::exp(-real.leaf_positions[i]);
            if (u <= 0.0) {
              pick = i;
              break;
            }
          }
          const double predicted = std::exp(-real.leaf_positions[spine_leaf]) / w_sum;
          a.diff.add((pick == spine_leaf ? 1.0 : 0.0) - predicted);
        });
    suite.add(se_check("spine_selection", acc.diff.mean(), 0.0, acc.diff.stderr_()));
  }

  // Tanaka harmonicity of the renewal function.
  if (!degenerate) {
    for (double beta : {0.5, 2.0, 5.0}) {
      const uint64_t scope =
          scoped_seed(seed ^ static_cast<uint64_t>(beta * 1024.0), "suite-tanaka");
      struct Acc {
        MeanAcc v;
        void merge(const Acc& o) { v.merge(o.v); }
      };
      Acc acc = run_replications<Acc>(
          budgets.tanaka_reps, par, [&](uint64_t rep, Acc& a) {
            RngStream rng(scope, rep);
            thread_local std::vector<double> scratch;
            const double s1 = walk.step(rng, scratch);
            a.v.add(s1 >= -beta ? renewal.eval(s1 + beta) : 0.0);
          });
      const double target = renewal.eval(beta);
      const double se = combined_se(acc.v.stderr_(), renewal.se_at(beta));
      std::ostringstream name;
      name << "tanaka_beta_" << beta;
      suite.add(se_check(name.str(), acc.v.mean(), target, se));
    }
  }

  // Renewal-theorem consistency: slope of R times mean |H1| is 1.
  if (!degenerate) {
    const double mh = ladder.mean_height(false);
    const double mh_se = ladder.mean_height_se(false);
    const double value = renewal.c0_slope.value * mh;
    const double se = value * std::sqrt(
        std::pow(renewal.c0_slope.stderr_ / renewal.c0_slope.value, 2) +
        std::pow(mh_se / mh, 2));
    suite.add(se_check("renewal_c0_consistency", value, 1.0, se));
  }

  // Sparre-Andersen exactness at n = 10.
  if (!degenerate) {
    const int n = 10;
    const uint64_t scope = scoped_seed(seed, "suite-sparre");
    struct Acc {
      HitAcc stay;
      void merge(const Acc& o) { stay.merge(o.stay); }
    };
    Acc acc = run_replications<Acc>(
        budgets.stay_positive_reps, par, [&](uint64_t rep, Acc& a) {
          RngStream rng(scope, rep);
          thread_local std::vector<double> scratch;
          double s = 0.0;
          bool ok = true;
          for (int k = 0; k < n && ok; ++k) {
            s += walk.step(rng, scratch);
            if (s < 0.0) ok = false;
          }
          a.stay.add(ok);
        });
    suite.add(se_check("sparre_andersen_n10", acc.stay.p(),
                       sparre_andersen_stay_positive(n), acc.stay.stderr_()));
  }

  return suite;
}

}  // namespace brw
