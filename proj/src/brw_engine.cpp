#include "brwlab/brw_engine.hpp"

#include <cmath>

namespace brw {

Frontier Frontier::root(double beta, double start) {
  Frontier f;
  f.beta = beta;
  f.positions = {start};
  f.path_min = {start};
  f.alive_kill0 = {start >= 0.0 ? uint8_t{1} : uint8_t{0}};
  f.alive_killbeta = {start >= -beta ? uint8_t{1} : uint8_t{0}};
  f.parent_index = {-1};
  return f;
}

bool evolve_into(const PointProcessModel& model, const Frontier& cur, Frontier& next,
                 const EvolveOptions& opt, RngStream& rng, PruneLedger& ledger,
                 std::vector<double>& scratch) {
  next.generation = cur.generation + 1;
  next.beta = cur.beta;
  next.positions.clear();
  next.path_min.clear();
  next.alive_kill0.clear();
  next.alive_killbeta.clear();
  next.parent_index.clear();
  const size_t hint = cur.size() * 2;
  next.positions.reserve(hint);
  next.path_min.reserve(hint);
  next.alive_kill0.reserve(hint);
  next.alive_killbeta.reserve(hint);
  next.parent_index.reserve(hint);

  const double beta = cur.beta;
  for (size_t i = 0; i < cur.size(); ++i) {
    const uint32_t n_children = model.sample_into(rng, scratch);
    const double parent_pos = cur.positions[i];
    const double parent_min = cur.path_min[i];
    for (uint32_t j = 0; j < n_children; ++j) {
      const double pos = parent_pos + scratch[j];
      if (pos > opt.barrier_abs) {
        if (opt.track_bias) {
          const double w = std::exp(-pos);
          ledger.weight += w;
          ledger.bound += (1.0 + std::max(pos, 0.0)) * w;
          ++ledger.particles;
        }
        continue;
      }
      const double pmin = std::min(parent_min, pos);
      if (pmin < opt.drop_path_below) continue;
      next.positions.push_back(pos);
      next.path_min.push_back(pmin);
      next.alive_kill0.push_back(pmin >= 0.0 ? 1 : 0);
      next.alive_killbeta.push_back(pmin >= -beta ? 1 : 0);
      next.parent_index.push_back(static_cast<int32_t>(i));
    }
    if (next.size() > opt.population_cap) return false;
  }
  return true;
}

double barrier_level(const PrunePolicy& policy, int horizon_n) {
  if (policy.mode == PrunePolicy::Mode::None) return kInf;
  return recentering(std::max(horizon_n, 1)) + policy.barrier_offset;
}

bool evolve(Frontier& frontier, const PointProcessModel& model, const PrunePolicy& policy,
            RngStream& rng, int horizon_n, PruneLedger* ledger, size_t population_cap) {
  EvolveOptions opt;
  opt.barrier_abs = barrier_level(policy, horizon_n);
  opt.track_bias = policy.track_bias;
  opt.population_cap = population_cap;
  PruneLedger local;
  Frontier next;
  std::vector<double> scratch;
  const bool ok = evolve_into(model, frontier, next, opt, rng, local, scratch);
  frontier = std::move(next);
  if (ledger) ledger->merge(local);
  return ok;
}

namespace {

// Minimum plus exact-equality tie count over positions selected by `keep`.
template <typename Keep>
std::pair<double, int> min_and_count(const std::vector<double>& positions, Keep keep) {
  double m = kInf;
  for (size_t i = 0; i < positions.size(); ++i)
    if (keep(i) && positions[i] < m) m = positions[i];
  if (m == kInf) return {kInf, 0};
  int count = 0;
  for (size_t i = 0; i < positions.size(); ++i)
    if (keep(i) && positions[i] == m) ++count;
  return {m, count};
}

}  // namespace

TreeRunStats run_tree(const PointProcessModel& model, int n, double beta,
                      const PrunePolicy& policy, RngStream& rng,
                      const RenewalFunction* renewal, size_t population_cap) {
  TreeRunStats stats;
  Frontier cur = Frontier::root(beta);
  Frontier next;
  EvolveOptions opt;
  opt.barrier_abs = barrier_level(policy, n);
  opt.track_bias = policy.track_bias;
  opt.population_cap = population_cap;
  PruneLedger ledger;
  std::vector<double> scratch;
  for (int g = 0; g < n; ++g) {
    if (!evolve_into(model, cur, next, opt, rng, ledger, scratch)) {
      stats.overflow = true;
      stats.pruned_mass_bound = ledger.bound;
      return stats;
    }
    std::swap(cur, next);
    if (cur.size() == 0) break;
  }

  stats.survived = cur.size() > 0;
  stats.pruned_mass_bound = ledger.bound;
  auto [m_all, c_all] = min_and_count(cur.positions, [](size_t) { return true; });
  stats.M_n = m_all;
  stats.argmin_count = c_all;
  auto [m_kill, c_kill] = min_and_count(
      cur.positions, [&](size_t i) { return cur.alive_kill0[i] != 0; });
  stats.M_n_kill = m_kill;
  stats.argmin_count_kill = c_kill;

  double w = 0.0, d = 0.0, dbeta = 0.0;
  for (size_t i = 0; i < cur.size(); ++i) {
    const double v = cur.positions[i];
    const double ew = std::exp(-v);
    w += ew;
    d += v * ew;
    if (renewal && cur.alive_killbeta[i]) dbeta += renewal->eval(beta + v) * ew;
  }
  stats.W_n = w;
  stats.D_n = d;
  if (renewal) stats.D_n_beta = dbeta;
  return stats;
}

StoppingLineResult stopping_line(const PointProcessModel& model, double A, RngStream& rng,
                                 const StoppingLineCaps& caps) {
  StoppingLineResult result;
  // Active particles all have their whole ancestral path strictly below A, so
  // a child at or above A is a first crossing by construction.
  std::vector<double> active = {0.0};
  std::vector<double> next;
  std::vector<double> scratch;
  if (A <= 0.0) {
    result.crossers.push_back({0.0, 0});
    result.sum_weight = 1.0;
    result.sum_vweight = 0.0;
    return result;
  }
  for (int gen = 1; gen <= caps.max_generation && !active.empty(); ++gen) {
    next.clear();
    for (double pos : active) {
      const uint32_t n_children = model.sample_into(rng, scratch);
      for (uint32_t j = 0; j < n_children; ++j) {
        const double child = pos + scratch[j];
        if (child >= A) {
          result.crossers.push_back({child, gen});
          result.sum_weight += std::exp(-child);
          result.sum_vweight += child * std::exp(-child);
        } else {
          next.push_back(child);
        }
      }
    }
    std::swap(active, next);
    if (active.size() > caps.max_population) {
      result.capped = true;
      break;
    }
  }
  if (!active.empty()) {
    result.capped = true;
    result.residual_population = active.size();
    for (double pos : active) result.residual_weight += std::exp(-pos);
  }
  return result;
}

namespace {

struct TailAcc {
  std::vector<HitAcc> kill, full;
  MeanAcc pruned_weight;
  uint64_t overflow = 0;

  void merge(const TailAcc& o) {
    if (kill.empty()) {
      kill = o.kill;
      full = o.full;
    } else if (!o.kill.empty()) {
      for (size_t i = 0; i < kill.size(); ++i) {
        kill[i].merge(o.kill[i]);
        full[i].merge(o.full[i]);
      }
    }
    pruned_weight.merge(o.pruned_weight);
    overflow += o.overflow;
  }
};

}  // namespace

TailTable minimum_tail_direct(const PointProcessModel& model, int n,
                              std::span<const double> z_grid, uint64_t replications,
                              const PrunePolicy& policy, uint64_t seed,
                              const ParallelConfig& par) {
  std::vector<double> levels;
  for (double z : z_grid) levels.push_back(a_n(n, z));
  const size_t nz = levels.size();
  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n), "tail-direct");

  TailAcc acc = run_replications<TailAcc>(
      replications, par, [&](uint64_t rep, TailAcc& a) {
        if (a.kill.empty()) {
          a.kill.resize(nz);
          a.full.resize(nz);
        }
        RngStream rng(scope, rep);
        thread_local std::vector<double> scratch;
        Frontier cur = Frontier::root();
        Frontier next;
        EvolveOptions opt;
        opt.barrier_abs = barrier_level(policy, n);
        opt.track_bias = policy.track_bias;
        PruneLedger ledger;
        bool overflow = false;
        for (int g = 0; g < n && cur.size() > 0; ++g) {
          if (!evolve_into(model, cur, next, opt, rng, ledger, scratch)) {
            overflow = true;
            break;
          }
          std::swap(cur, next);
        }
        if (overflow) {
          ++a.overflow;
          return;
        }
        double m_full = kInf, m_kill = kInf;
        for (size_t i = 0; i < cur.size(); ++i) {
          m_full = std::min(m_full, cur.positions[i]);
          if (cur.alive_kill0[i]) m_kill = std::min(m_kill, cur.positions[i]);
        }
        for (size_t i = 0; i < nz; ++i) {
          a.full[i].add(m_full < levels[i]);
          a.kill[i].add(m_kill < levels[i]);
        }
        a.pruned_weight.add(ledger.weight);
      });

  TailTable table;
  table.n = n;
  table.replications = replications;
  table.seed = seed;
  table.mean_pruned_weight = acc.pruned_weight.mean();
  table.overflow_count = acc.overflow;
  for (size_t i = 0; i < nz; ++i) {
    TailRow row;
    row.z = z_grid[i];
    row.feasible = std::exp(-row.z) * static_cast<double>(replications) >= 100.0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (row.feasible) {
      row.p_full = acc.full[i].estimate(seed, "direct_full");
      row.p_kill = acc.kill[i].estimate(seed, "direct_kill");
      const double ez = std::exp(row.z);
      row.ez_pkill = ez * row.p_kill.value;
      row.ez_pkill_se = ez * row.p_kill.stderr_;
      // The recentred scalings only make sense in the z > 0 tail regime.
      row.ezz_pfull = row.z > 0.0 ? ez / row.z * row.p_full.value : nan;
      row.ezz_pfull_se = row.z > 0.0 ? ez / row.z * row.p_full.stderr_ : nan;
      // Pruned descendants could in principle re-enter below a_n(z); the lost
      // probability is at most e^{a_n(z)} times the mean pruned weight.
      row.prune_bias_bound = std::exp(levels[i]) * table.mean_pruned_weight;
    } else {
      row.p_full = EstimateWithCI{nan, nan, replications, seed, "direct_full"};
      row.p_kill = EstimateWithCI{nan, nan, replications, seed, "direct_kill"};
      row.ez_pkill = row.ez_pkill_se = row.ezz_pfull = row.ezz_pfull_se = nan;
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace brw
