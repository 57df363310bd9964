#include "brwlab/offspring.hpp"

#include <cmath>
#include <sstream>

namespace brw {

namespace {

// Spine child index: categorical with weights exp(-v_i). Displacements are
// shifted by their minimum before exponentiating.
int draw_spine_index(RngStream& rng, const std::vector<double>& displacements) {
  double vmin = displacements[0];
  for (double v : displacements) vmin = std::min(vmin, v);
  double total = 0.0;
  for (double v : displacements) total += std::exp(-(v - vmin));
  double u = rng.next_unit() * total;
  for (size_t i = 0; i < displacements.size(); ++i) {
    u -= std::exp(-(displacements[i] - vmin));
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(displacements.size()) - 1;
}

// Size-biased count for N = 1 + Poisson(m): 1 + Poisson(m) + Bernoulli(m/(1+m)).
uint32_t sample_size_biased_shifted_poisson(RngStream& rng, double m) {
  const uint32_t base = 1 + rng.next_poisson(m);
  return base + (rng.next_unit() * (1.0 + m) < m ? 1u : 0u);
}

void check_child_cap(uint64_t count) {
  if (count > kChildCap)
    throw ModelError("offspring sample exceeded the hard child cap of 65536");
}

}  // namespace

uint32_t PointProcessModel::sample_into(RngStream& rng, std::vector<double>& out) const {
  out.clear();
  switch (family) {
    case ModelFamily::BinaryGaussian: {
      const double sd = std::sqrt(s2);
      for (int i = 0; i < fixed_children; ++i) out.push_back(rng.next_normal(mu0, sd));
      return static_cast<uint32_t>(fixed_children);
    }
    case ModelFamily::PoissonGaussian: {
      const uint32_t n = 1 + rng.next_poisson(poisson_m);
      check_child_cap(n);
      const double sd = std::sqrt(s2);
      for (uint32_t i = 0; i < n; ++i) out.push_back(rng.next_normal(mu0, sd));
      return n;
    }
    case ModelFamily::OneChildZero:
      out.push_back(0.0);
      return 1;
    case ModelFamily::DriftOne:
      out.push_back(drift);
      return 1;
    case ModelFamily::Custom: {
      if (!custom_sampler) throw ModelError("custom model lacks a sampler");
      custom_sampler(rng, out);
      check_child_cap(out.size());
      return static_cast<uint32_t>(out.size());
    }
  }
  throw ModelError("unreachable model family");
}

int PointProcessModel::sample_tilted_into(RngStream& rng, std::vector<double>& out) const {
  out.clear();
  switch (family) {
    case ModelFamily::BinaryGaussian:
    case ModelFamily::PoissonGaussian: {
      // Exact mixture construction for i.i.d. displacements: size-bias the
      // child count, give one uniformly chosen coordinate the exp-tilted law
      // N(mu0 - s2, s2), then re-draw the spine proportionally to exp(-v).
      uint32_t n;
      if (family == ModelFamily::BinaryGaussian) {
        n = static_cast<uint32_t>(fixed_children);
      } else {
        n = sample_size_biased_shifted_poisson(rng, poisson_m);
        check_child_cap(n);
      }
      const double sd = std::sqrt(s2);
      for (uint32_t i = 0; i < n; ++i) out.push_back(rng.next_normal(mu0, sd));
      const uint32_t tilted = static_cast<uint32_t>(rng.next_below(n));
      out[tilted] = rng.next_normal(mu0 - s2, sd);
      return draw_spine_index(rng, out);
    }
    case ModelFamily::OneChildZero:
      out.push_back(0.0);
      return 0;
    case ModelFamily::DriftOne:
      // Deterministic point process: weight is constant, tilt is the identity.
      out.push_back(drift);
      return 0;
    case ModelFamily::Custom: {
      if (custom_tilted) {
        const int idx = custom_tilted(rng, out);
        check_child_cap(out.size());
        if (idx < 0 || idx >= static_cast<int>(out.size()))
          throw ModelError("custom tilted sampler returned a bad spine index");
        return idx;
      }
      if (envelope > 0.0) {
        // Rejection fallback: accept a plain sample with probability
        // sum(exp(-v)) / envelope. A weight above the envelope voids the
        // construction, so it is surfaced as an error.
        for (int attempt = 0; attempt < 1 << 20; ++attempt) {
          sample_into(rng, out);
          double w = 0.0;
          for (double v : out) w += std::exp(-v);
          if (w > envelope)
            throw ModelError("tilted rejection envelope exceeded for model " + name);
          if (rng.next_unit() * envelope < w) return draw_spine_index(rng, out);
        }
        throw ModelError("tilted rejection sampler failed to accept");
      }
      throw ModelError("model " + name + " supports no tilted construction");
    }
  }
  throw ModelError("unreachable model family");
}

bool PointProcessModel::has_exact_walk_step() const {
  return is_gaussian_iid() || family == ModelFamily::OneChildZero;
}

double PointProcessModel::walk_sigma_sq() const {
  if (analytic) return analytic->sigma_sq;
  if (is_gaussian_iid()) return s2;
  if (family == ModelFamily::OneChildZero) return 0.0;
  throw ModelError("model " + name + " has no analytic walk variance");
}

double PointProcessModel::sample_walk_step(RngStream& rng,
                                           std::vector<double>& scratch) const {
  if (is_gaussian_iid()) {
    // The e^-x tilt of N(mu0, s2) is N(mu0 - s2, s2); in the boundary case
    // mu0 = s2 so the step is centered.
    return rng.next_normal(mu0 - s2, std::sqrt(s2));
  }
  if (family == ModelFamily::OneChildZero) return 0.0;
  // Generic: the spine displacement of a tilted sample has exactly the
  // many-to-one step law.
  const int idx = sample_tilted_into(rng, scratch);
  return scratch[static_cast<size_t>(idx)];
}

uint64_t PointProcessModel::hash() const {
  const std::string d = describe();
  return fnv1a64(d.data(), d.size());
}

std::string PointProcessModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << name << "|family=" << static_cast<int>(family) << "|mu0=" << mu0 << "|s2=" << s2
     << "|b=" << fixed_children << "|m=" << poisson_m << "|drift=" << drift;
  return os.str();
}

PointProcessModel make_binary_gaussian(int children) {
  if (children < 2) throw ModelError("binary-gaussian needs at least 2 children");
  PointProcessModel m;
  m.name = children == 2 ? "binary-gaussian" : "b" + std::to_string(children) + "-gaussian";
  m.family = ModelFamily::BinaryGaussian;
  m.fixed_children = children;
  // Boundary case for b iid Gaussian children: mu0 = s2 = 2 ln b.
  m.s2 = 2.0 * std::log(static_cast<double>(children));
  m.mu0 = m.s2;
  m.analytic = AnalyticMoments{static_cast<double>(children), m.s2, true};
  return m;
}

PointProcessModel make_poisson_gaussian(double poisson_m) {
  if (!(poisson_m > 0.0)) throw ModelError("poisson-gaussian needs m > 0");
  PointProcessModel m;
  m.name = "poisson-gaussian";
  m.family = ModelFamily::PoissonGaussian;
  m.poisson_m = poisson_m;
  m.s2 = 2.0 * std::log1p(poisson_m);
  m.mu0 = m.s2;
  m.analytic = AnalyticMoments{1.0 + poisson_m, m.s2, true};
  return m;
}

PointProcessModel make_one_child_zero() {
  PointProcessModel m;
  m.name = "one-child-zero";
  m.family = ModelFamily::OneChildZero;
  m.analytic = AnalyticMoments{1.0, 0.0, true};
  return m;
}

PointProcessModel make_drift_one(double drift) {
  PointProcessModel m;
  m.name = "drift-one";
  m.family = ModelFamily::DriftOne;
  m.drift = drift;
  return m;
}

PointProcessModel model_by_name(const std::string& name) {
  if (name == "binary-gaussian") return make_binary_gaussian();
  if (name == "poisson-gaussian") return make_poisson_gaussian();
  if (name == "one-child-zero") return make_one_child_zero();
  if (name == "drift-one") return make_drift_one();
  throw ModelError("unknown model: " + name);
}

DisplacementSet sample_offspring(const PointProcessModel& model, RngStream& rng) {
  DisplacementSet set;
  model.sample_into(rng, set.displacements);
  return set;
}

DisplacementSet sample_tilted_offspring(const PointProcessModel& model, RngStream& rng) {
  DisplacementSet set;
  set.spine_index = model.sample_tilted_into(rng, set.displacements);
  return set;
}

namespace {

struct BoundaryAcc {
  MeanAcc count, weight, vweight, v2weight, xlog2, xtlog;

  void merge(const BoundaryAcc& o) {
    count.merge(o.count);
    weight.merge(o.weight);
    vweight.merge(o.vweight);
    v2weight.merge(o.v2weight);
    xlog2.merge(o.xlog2);
    xtlog.merge(o.xtlog);
  }
};

}  // namespace

ModelReport check_boundary_conditions(const PointProcessModel& model, uint64_t budget,
                                      uint64_t seed, const ParallelConfig& par) {
  if (budget < 10000) throw ModelError("check_boundary_conditions needs budget >= 1e4");
  const uint64_t scope = scoped_seed(seed, "boundary-check");

  BoundaryAcc acc = run_replications<BoundaryAcc>(
      budget, par, [&](uint64_t rep, BoundaryAcc& a) {
        RngStream rng(scope, rep);
        thread_local std::vector<double> buf;
        model.sample_into(rng, buf);
        double x = 0.0, xv = 0.0, xvv = 0.0, xt = 0.0;
        for (double v : buf) {
          const double w = std::exp(-v);
          x += w;
          xv += v * w;
          xvv += v * v * w;
          if (v > 0.0) xt += v * w;
        }
        a.count.add(static_cast<double>(buf.size()));
        a.weight.add(x);
        a.vweight.add(xv);
        a.v2weight.add(xvv);
        const double lx = x > 1.0 ? std::log(x) : 0.0;
        a.xlog2.add(x * lx * lx);
        const double lxt = xt > 1.0 ? std::log(xt) : 0.0;
        a.xtlog.add(xt * lxt);
      });

  ModelReport rep;
  rep.model_name = model.name;
  rep.model_hash = model.hash();
  rep.budget = budget;
  rep.seed = seed;
  rep.mean_children = acc.count.estimate(seed, "mean_children");
  rep.mean_weight = acc.weight.estimate(seed, "mean_weight");
  rep.mean_vweight = acc.vweight.estimate(seed, "mean_vweight");
  rep.sigma_sq = acc.v2weight.estimate(seed, "sigma_sq");
  rep.x_log2 = acc.xlog2.estimate(seed, "x_log2");
  rep.xt_log = acc.xtlog.estimate(seed, "xt_log");

  rep.supercritical_pass =
      rep.mean_children.value - 1.0 > 4.0 * rep.mean_children.stderr_;
  rep.boundary_pass = rep.mean_weight.within(1.0, 4.0);
  rep.derivative_pass = rep.mean_vweight.within(0.0, 4.0);
  rep.sigma_pass = rep.sigma_sq.value > 0.0 && std::isfinite(rep.sigma_sq.value);
  rep.all_pass =
      rep.supercritical_pass && rep.boundary_pass && rep.derivative_pass && rep.sigma_pass;
  return rep;
}

}  // namespace brw
