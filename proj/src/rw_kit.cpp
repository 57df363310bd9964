#include "brwlab/rw_kit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace brw {

namespace {

class RwError : public std::runtime_error {
 public:
  explicit RwError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace

WalkModel derive_walk(const PointProcessModel& model) {
  WalkModel w;
  w.source = &model;
  w.source_hash = model.hash();
  if (model.family == ModelFamily::OneChildZero) {
    w.kind = WalkModel::Kind::Zero;
    w.sigma_sq = 0.0;
    return w;
  }
  if (model.is_gaussian_iid()) {
    w.kind = WalkModel::Kind::GaussExact;
    w.mu = model.mu0 - model.s2;  // exponential tilt of N(mu0, s2)
    w.sigma_sq = model.s2;
    return w;
  }
  if (model.custom_tilted || model.envelope > 0.0) {
    w.kind = WalkModel::Kind::SpineGeneric;
    w.sigma_sq = model.analytic ? model.analytic->sigma_sq : 0.0;
    return w;
  }
  throw ModelError("derive_walk: model " + model.name +
                   " has neither an exact tilt nor a generic construction");
}

double LadderTable::mean_height(bool minus_side) const {
  const auto& h = minus_side ? heights_minus : heights;
  if (h.empty()) return 0.0;
  return std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
}

double LadderTable::mean_height_se(bool minus_side) const {
  const auto& h = minus_side ? heights_minus : heights;
  if (h.size() < 2) return 0.0;
  const double m = mean_height(minus_side);
  double ss = 0.0;
  for (double v : h) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(h.size() - 1) / static_cast<double>(h.size()));
}

namespace {

struct LadderAcc {
  std::vector<double> heights, epochs, heights_minus, epochs_minus;
  uint64_t caps_plus = 0, caps_minus = 0;

  void merge(const LadderAcc& o) {
    heights.insert(heights.end(), o.heights.begin(), o.heights.end());
    epochs.insert(epochs.end(), o.epochs.begin(), o.epochs.end());
    heights_minus.insert(heights_minus.end(), o.heights_minus.begin(),
                         o.heights_minus.end());
    epochs_minus.insert(epochs_minus.end(), o.epochs_minus.begin(),
                        o.epochs_minus.end());
    caps_plus += o.caps_plus;
    caps_minus += o.caps_minus;
  }
};

// Sorts heights ascending and keeps the (|H1|, T1) pairing intact.
void sort_by_height(std::vector<double>& heights, std::vector<double>& epochs) {
  std::vector<size_t> order(heights.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return heights[a] < heights[b]; });
  std::vector<double> h(heights.size()), e(heights.size());
  for (size_t i = 0; i < order.size(); ++i) {
    h[i] = heights[order[i]];
    e[i] = epochs[order[i]];
  }
  heights = std::move(h);
  epochs = std::move(e);
}

// First strict descending ladder of `sign * S`: first k with sign*S_k < 0.
// Returns false when the step cap is hit.
bool first_ladder(const WalkModel& walk, double sign, uint64_t step_cap, RngStream& rng,
                  std::vector<double>& scratch, double& height, double& epoch) {
  double s = 0.0;
  for (uint64_t k = 1; k <= step_cap; ++k) {
    s += sign * walk.step(rng, scratch);
    if (s < 0.0) {
      height = -s;
      epoch = static_cast<double>(k);
      return true;
    }
  }
  return false;
}

}  // namespace

LadderTable build_ladder_table(const WalkModel& walk, uint64_t budget, uint64_t seed,
                               uint64_t step_cap, const ParallelConfig& par) {
  if (budget < 1000) throw RwError("build_ladder_table needs budget >= 1e3");
  if (walk.kind == WalkModel::Kind::Zero)
    throw RwError("build_ladder_table: degenerate walk has no ladder epochs");

  const uint64_t scope = scoped_seed(seed, "ladder-table");
  LadderAcc acc = run_replications<LadderAcc>(
      budget, par, [&](uint64_t rep, LadderAcc& a) {
        thread_local std::vector<double> scratch;
        double h, t;
        // Capped walks are replaced by fresh draws from reserved stream ids
        // so the table still holds `budget` samples.
        RngStream rng(scope, rep);
        uint64_t retry = 0;
        while (!first_ladder(walk, +1.0, step_cap, rng, scratch, h, t)) {
          ++a.caps_plus;
          rng.reseed(scope, budget + (++retry) * budget + rep);
        }
        a.heights.push_back(h);
        a.epochs.push_back(t);
        RngStream rng_minus(scoped_seed(scope, "minus"), rep);
        retry = 0;
        while (!first_ladder(walk, -1.0, step_cap, rng_minus, scratch, h, t)) {
          ++a.caps_minus;
          rng_minus.reseed(scoped_seed(scope, "minus"), budget + (++retry) * budget + rep);
        }
        a.heights_minus.push_back(h);
        a.epochs_minus.push_back(t);
      });

  LadderTable table;
  table.heights = std::move(acc.heights);
  table.epochs = std::move(acc.epochs);
  table.heights_minus = std::move(acc.heights_minus);
  table.epochs_minus = std::move(acc.epochs_minus);
  table.budget = budget;
  table.step_cap = step_cap;
  table.cap_events_plus = acc.caps_plus;
  table.cap_events_minus = acc.caps_minus;
  table.seed = seed;
  table.model_hash = walk.source_hash;
  sort_by_height(table.heights, table.epochs);
  sort_by_height(table.heights_minus, table.epochs_minus);
  return table;
}

double RenewalFunction::eval(double x) const {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return 1.0;
  if (grid.empty()) return 1.0;
  if (x >= grid.back())
    return values.back() + c0_hat.value * (x - grid.back());
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const size_t hi = static_cast<size_t>(it - grid.begin());
  const size_t lo = hi - 1;
  const double t = (x - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + t * (values[hi] - values[lo]);
}

double RenewalFunction::se_at(double x) const {
  if (x <= 0.0 || stderrs.empty()) return 0.0;
  if (x >= grid.back()) return stderrs.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const size_t hi = static_cast<size_t>(it - grid.begin());
  return std::max(stderrs[hi - 1], stderrs[hi]);
}

double RenewalFunction::integral(double a, double b) const {
  if (b <= a) return 0.0;
  const double step = grid.size() > 1 ? grid[1] - grid[0] : 0.05;
  const int cells = std::max(1, static_cast<int>(std::ceil((b - a) / step)));
  const double h = (b - a) / cells;
  double sum = 0.5 * (eval(a) + eval(b));
  for (int i = 1; i < cells; ++i) sum += eval(a + h * i);
  return sum * h;
}

double RenewalFunction::integral_se(double a, double b) const {
  // Grid-point errors share the resampling replications, hence are strongly
  // positively correlated; treating them as perfectly correlated gives a
  // conservative bound: se(integral) <= (b - a) * max se.
  double m = 0.0;
  for (size_t i = 0; i < grid.size(); ++i)
    if (grid[i] >= a && grid[i] <= b) m = std::max(m, stderrs[i]);
  if (m == 0.0 && !stderrs.empty()) m = stderrs.back();
  return (b - a) * m;
}

namespace {

struct RenewalAcc {
  // cell_hits[i] counts replications whose ladder point count first exceeds
  // grid level i; converted to R by postfix summation.
  std::vector<uint64_t> first_exceed;
  std::vector<uint64_t> count_sum;    // per-cell sum of counts (for SE)
  std::vector<uint64_t> count_sumsq;  // per-cell sum of squared counts
  uint64_t n = 0;

  void merge(const RenewalAcc& o) {
    if (first_exceed.empty()) {
      first_exceed = o.first_exceed;
      count_sum = o.count_sum;
      count_sumsq = o.count_sumsq;
    } else if (!o.first_exceed.empty()) {
      for (size_t i = 0; i < first_exceed.size(); ++i) {
        first_exceed[i] += o.first_exceed[i];
        count_sum[i] += o.count_sum[i];
        count_sumsq[i] += o.count_sumsq[i];
      }
    }
    n += o.n;
  }
};

}  // namespace

RenewalFunction estimate_renewal(const LadderTable& table, bool minus_side, double x_max,
                                 double dx, uint64_t replications, uint64_t seed,
                                 const ParallelConfig& par) {
  const auto& heights = minus_side ? table.heights_minus : table.heights;
  if (heights.empty()) throw RwError("estimate_renewal: empty ladder table");
  const size_t cells = static_cast<size_t>(std::llround(x_max / dx));
  if (cells < 2) throw RwError("estimate_renewal: grid too small");

  const uint64_t scope =
      scoped_seed(seed, minus_side ? "renewal-minus" : "renewal-plus");
  const uint64_t m = heights.size();

  RenewalAcc acc = run_replications<RenewalAcc>(
      replications, par, [&](uint64_t rep, RenewalAcc& a) {
        if (a.count_sum.empty()) {
          a.count_sum.assign(cells + 1, 0);
          a.count_sumsq.assign(cells + 1, 0);
          a.first_exceed.assign(cells + 1, 0);
        }
        RngStream rng(scope, rep);
        // Walk the renewal process of resampled heights; count[i] = number of
        // ladder points (including the 0th at the origin) with cumulative
        // height <= grid[i].
        double cum = 0.0;
        uint64_t count = 1;
        size_t cell = 0;
        for (;;) {
          cum += heights[rng.next_below(m)];
          const size_t reach =
              cum > x_max ? cells + 1
                          : static_cast<size_t>(std::ceil(cum / dx));
          // Grid points in [cell, min(reach, cells)] see `count` ladder points.
          for (size_t i = cell; i <= cells && i < reach; ++i) {
            a.count_sum[i] += count;
            a.count_sumsq[i] += count * count;
          }
          if (reach > cells) break;
          cell = reach;
          ++count;
        }
        ++a.n;
      });

  RenewalFunction rf;
  rf.minus_side = minus_side;
  rf.replications = replications;
  rf.grid.resize(cells + 1);
  rf.values.resize(cells + 1);
  rf.stderrs.resize(cells + 1);
  const double n = static_cast<double>(acc.n);
  for (size_t i = 0; i <= cells; ++i) {
    rf.grid[i] = dx * static_cast<double>(i);
    const double mean = static_cast<double>(acc.count_sum[i]) / n;
    const double var =
        (static_cast<double>(acc.count_sumsq[i]) / n - mean * mean) * n / (n - 1.0);
    rf.values[i] = mean;
    rf.stderrs[i] = var > 0.0 ? std::sqrt(var / n) : 0.0;
  }
  rf.values[0] = 1.0;  // exact: the origin is the only ladder point at x = 0
  rf.stderrs[0] = 0.0;

  // c0 from the renewal theorem: 1 / E|H1|, delta-method SE.
  const double mh = table.mean_height(minus_side);
  const double mh_se = table.mean_height_se(minus_side);
  rf.c0_hat = EstimateWithCI{1.0 / mh, mh_se / (mh * mh),
                             static_cast<uint64_t>(heights.size()), seed,
                             minus_side ? "c0_minus" : "c0"};

  // Slope of R over the upper half of the grid (least squares); consistency
  // diagnostic against c0_hat.
  {
    const size_t lo = cells / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(cells - lo + 1);
    for (size_t i = lo; i <= cells; ++i) {
      sx += rf.grid[i];
      sy += rf.values[i];
      sxx += rf.grid[i] * rf.grid[i];
      sxy += rf.grid[i] * rf.values[i];
    }
    const double denom = k * sxx - sx * sx;
    const double slope = (k * sxy - sx * sy) / denom;
    double rss = 0.0;
    const double intercept = (sy - slope * sx) / k;
    for (size_t i = lo; i <= cells; ++i) {
      const double r = rf.values[i] - intercept - slope * rf.grid[i];
      rss += r * r;
    }
    // Residual-based SE understates correlated MC noise; add the endpoint SEs
    // over the fit span as a conservative floor.
    const double se_fit = std::sqrt(std::max(rss / std::max(1.0, k - 2.0), 0.0) * k / denom);
    const double span = rf.grid[cells] - rf.grid[lo];
    const double se_mc = combined_se(rf.stderrs[cells], rf.stderrs[lo]) / span;
    rf.c0_slope = EstimateWithCI{slope, std::max(se_fit, se_mc), acc.n, seed,
                                 minus_side ? "c0_slope_minus" : "c0_slope"};
  }
  return rf;
}

namespace {

EstimateWithCI renewal_point(const LadderTable& table, bool minus_side, double x,
                             uint64_t replications, uint64_t seed) {
  if (x < 0.0) return EstimateWithCI{0.0, 0.0, replications, seed, "renewal_R"};
  if (x == 0.0) return EstimateWithCI{1.0, 0.0, replications, seed, "renewal_R"};
  const auto& heights = minus_side ? table.heights_minus : table.heights;
  if (heights.empty()) throw RwError("renewal_R: empty ladder table");
  RngStream rng(scoped_seed(seed, "renewal-point"), minus_side ? 1 : 0);
  MeanAcc acc;
  const uint64_t m = heights.size();
  for (uint64_t rep = 0; rep < replications; ++rep) {
    double cum = 0.0;
    uint64_t count = 1;
    for (;;) {
      cum += heights[rng.next_below(m)];
      if (cum > x) break;
      ++count;
    }
    acc.add(static_cast<double>(count));
  }
  return acc.estimate(seed, minus_side ? "renewal_R_minus" : "renewal_R");
}

}  // namespace

EstimateWithCI renewal_R(const LadderTable& table, double x, uint64_t replications,
                         uint64_t seed) {
  return renewal_point(table, false, x, replications, seed);
}

EstimateWithCI renewal_R_minus(const LadderTable& table, double x, uint64_t replications,
                               uint64_t seed) {
  return renewal_point(table, true, x, replications, seed);
}

namespace {

struct StayAcc {
  HitAcc plus, minus;
  void merge(const StayAcc& o) {
    plus.merge(o.plus);
    minus.merge(o.minus);
  }
};

// Affine fit y_i = c + b / sqrt(n_i), weighted by 1/se^2; returns (c, se(c)).
EstimateWithCI plateau_intercept(const std::vector<double>& inv_sqrt_n,
                                 const std::vector<double>& y,
                                 const std::vector<double>& se, uint64_t seed,
                                 const std::string& kind) {
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double w = se[i] > 0 ? 1.0 / (se[i] * se[i]) : 1.0;
    sw += w;
    swx += w * inv_sqrt_n[i];
    swy += w * y[i];
    swxx += w * inv_sqrt_n[i] * inv_sqrt_n[i];
    swxy += w * inv_sqrt_n[i] * y[i];
  }
  const double denom = sw * swxx - swx * swx;
  double c, var_c;
  if (y.size() < 2 || std::abs(denom) < 1e-14) {
    c = swy / sw;
    var_c = 1.0 / sw;
  } else {
    c = (swxx * swy - swx * swxy) / denom;
    var_c = swxx / denom;
  }
  return EstimateWithCI{c, std::sqrt(std::max(var_c, 0.0)), 0, seed, kind};
}

}  // namespace

ConstantsReport estimate_constants(const WalkModel& walk, std::span<const int> n_grid,
                                   uint64_t budget, uint64_t seed,
                                   const LadderTable* ladder, const ParallelConfig& par) {
  ConstantsReport report;
  report.seed = seed;
  report.c_symmetric_exact = 1.0 / std::sqrt(M_PI);

  std::vector<double> inv_sqrt_n, yp, sp, ym, sm;
  for (int n : n_grid) {
    if (n < 1) throw RwError("estimate_constants: n must be positive");
    const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n), "constants");
    StayAcc acc = run_replications<StayAcc>(
        budget, par, [&](uint64_t rep, StayAcc& a) {
          thread_local std::vector<double> scratch;
          RngStream rng(scope, rep);
          // One pass serves both signs: min >= 0 and max <= 0 tracked until
          // both are decided or n steps elapse.
          double s = 0.0;
          bool min_ok = true, max_ok = true;
          for (int k = 0; k < n && (min_ok || max_ok); ++k) {
            s += walk.step(rng, scratch);
            if (s < 0.0) min_ok = false;
            if (s > 0.0) max_ok = false;
          }
          a.plus.add(min_ok);
          a.minus.add(max_ok);
        });
    ConstantsRow row;
    row.n = n;
    row.stay_positive = acc.plus.estimate(seed, "stay_positive");
    row.stay_negative = acc.minus.estimate(seed, "stay_negative");
    const double rn = std::sqrt(static_cast<double>(n));
    row.sqrt_n_scaled_plus = rn * row.stay_positive.value;
    row.sqrt_n_scaled_minus = rn * row.stay_negative.value;
    row.sparre_andersen_exact = sparre_andersen_stay_positive(n);
    report.rows.push_back(row);

    inv_sqrt_n.push_back(1.0 / rn);
    yp.push_back(row.sqrt_n_scaled_plus);
    sp.push_back(rn * row.stay_positive.stderr_);
    ym.push_back(row.sqrt_n_scaled_minus);
    sm.push_back(rn * row.stay_negative.stderr_);
  }
  report.c_plus_hat = plateau_intercept(inv_sqrt_n, yp, sp, seed, "c_plus");
  report.c_minus_hat = plateau_intercept(inv_sqrt_n, ym, sm, seed, "c_minus");
  if (ladder) {
    const double mh = ladder->mean_height(false);
    const double mh_se = ladder->mean_height_se(false);
    report.c0_hat = EstimateWithCI{1.0 / mh, mh_se / (mh * mh),
                                   static_cast<uint64_t>(ladder->heights.size()), seed,
                                   "c0"};
  }
  return report;
}

CheckReport ballot_check(const WalkModel& walk, BallotScenario scenario,
                         const BallotParams& p, uint64_t budget, uint64_t seed,
                         const ParallelConfig& par) {
  if (p.n < 1) throw RwError("ballot_check: n must be positive");
  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(p.n), "ballot");
  const int late_start = static_cast<int>(std::ceil(p.lambda * p.n));

  HitAcc acc = run_replications<HitAcc>(budget, par, [&](uint64_t rep, HitAcc& a) {
    thread_local std::vector<double> scratch;
    RngStream rng(scope, rep);
    double s = p.x;
    bool alive = true;
    for (int k = 1; k <= p.n && alive; ++k) {
      s += walk.step(rng, scratch);
      if (s < 0.0) alive = false;
      if (scenario == BallotScenario::TwoBarrier && k >= late_start && s < p.y)
        alive = false;
      if (scenario == BallotScenario::Lower && k > p.n / 2 && s < p.a) alive = false;
    }
    if (!alive) {
      a.add(false);
      return;
    }
    switch (scenario) {
      case BallotScenario::Kozlov:
        a.add(true);
        break;
      case BallotScenario::Window:
        a.add(s >= p.a && s <= p.b);
        break;
      case BallotScenario::TwoBarrier:
        a.add(s >= p.y + p.a && s <= p.y + p.b);
        break;
      case BallotScenario::Lower:
        a.add(s >= p.a && s <= p.a + 1.0);
        break;
    }
  });

  CheckReport rep;
  switch (scenario) {
    case BallotScenario::Kozlov:
      rep.label = "kozlov";
      rep.scale_exponent = -0.5;
      break;
    case BallotScenario::Window:
      rep.label = "window";
      rep.scale_exponent = -1.5;
      break;
    case BallotScenario::TwoBarrier:
      rep.label = "two-barrier";
      rep.scale_exponent = -1.5;
      break;
    case BallotScenario::Lower:
      rep.label = "lower";
      rep.scale_exponent = -1.5;
      break;
  }
  rep.probability = acc.estimate(seed, rep.label);
  const double scale = std::pow(static_cast<double>(p.n), -rep.scale_exponent);
  rep.scaled = scale * rep.probability.value;
  rep.scaled_se = scale * rep.probability.stderr_;
  rep.seed = seed;
  return rep;
}

Lemma21Report lemma21_check(const WalkModel& walk, double a, int n, double y,
                            double lambda_n, uint64_t budget,
                            const RenewalFunction& r_minus, uint64_t seed,
                            double c_plus, double c_minus, const ParallelConfig& par) {
  if (!(lambda_n > 0.0 && lambda_n < 1.0)) throw RwError("lemma21_check: lambda in (0,1)");
  if (y < 0.0) throw RwError("lemma21_check: y >= 0 required");
  const uint64_t scope = scoped_seed(seed ^ static_cast<uint64_t>(n), "lemma21");
  const int late_start = static_cast<int>(std::ceil(lambda_n * n));

  HitAcc acc = run_replications<HitAcc>(budget, par, [&](uint64_t rep, HitAcc& hits) {
    thread_local std::vector<double> scratch;
    RngStream rng(scope, rep);
    double s = 0.0;
    for (int k = 1; k <= n; ++k) {
      s += walk.step(rng, scratch);
      if (s < 0.0 || (k >= late_start && s < y)) {
        hits.add(false);
        return;
      }
    }
    hits.add(s - y >= 0.0 && s - y <= a);
  });

  Lemma21Report rep;
  rep.seed = seed;
  rep.lhs = acc.estimate(seed, "lemma21_lhs");
  const double n32 = std::pow(static_cast<double>(n), 1.5);
  rep.lhs_scaled = n32 * rep.lhs.value;
  rep.lhs_scaled_se = n32 * rep.lhs.stderr_;
  const double cp = c_plus > 0.0 ? c_plus : 1.0 / std::sqrt(M_PI);
  const double cm = c_minus > 0.0 ? c_minus : 1.0 / std::sqrt(M_PI);
  rep.constant = cm * cp * std::sqrt(M_PI) / (walk.sigma() * std::sqrt(2.0));
  rep.integral = r_minus.integral(0.0, a);
  rep.integral_se = r_minus.integral_se(0.0, a);
  rep.rhs = rep.constant * rep.integral;
  rep.rhs_se = rep.constant * rep.integral_se;
  return rep;
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_ladder_cache(const std::filesystem::path& path, const LadderTable& table) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RwError("cannot open " + tmp.string());
    out.write("BRWL", 4);
    const uint32_t version = 1;
    write_raw(out, version);
    const uint64_t count = table.heights.size();
    write_raw(out, count);
    for (uint64_t i = 0; i < count; ++i) {
      write_raw(out, table.heights[i]);
      write_raw(out, table.epochs[i]);
    }
    for (uint64_t i = 0; i < count; ++i) {
      write_raw(out, table.heights_minus[i]);
      write_raw(out, table.epochs_minus[i]);
    }
    if (!out) throw RwError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LadderTable load_ladder_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RwError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "BRWL", 4) != 0)
    throw RwError("bad magic in " + path.string());
  uint32_t version = 0;
  read_raw(in, version);
  if (version != 1) throw RwError("unsupported ladder cache version");
  uint64_t count = 0;
  read_raw(in, count);
  LadderTable table;
  table.budget = count;
  table.heights.resize(count);
  table.epochs.resize(count);
  table.heights_minus.resize(count);
  table.epochs_minus.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    read_raw(in, table.heights[i]);
    read_raw(in, table.epochs[i]);
  }
  for (uint64_t i = 0; i < count; ++i) {
    read_raw(in, table.heights_minus[i]);
    read_raw(in, table.epochs_minus[i]);
  }
  if (!in) throw RwError("truncated ladder cache: " + path.string());
  return table;
}

std::string ladder_cache_name(uint64_t model_hash, uint64_t seed, uint64_t budget) {
  char buf[80];
  std::snprintf(buf, sizeof(buf), "ladder_%016llx_%llu_%llu.brwl",
                static_cast<unsigned long long>(model_hash),
                static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(budget));
  return buf;
}

}  // namespace brw
