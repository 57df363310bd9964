#pragma once

// Estimation plumbing shared by every module: mean/variance accumulators with
// associative merge, confidence intervals, and the distribution tests used by
// the identity suite (KS, chi-square).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace brw {

struct EstimateWithCI {
  double value = 0.0;
  double stderr_ = 0.0;
  uint64_t count = 0;
  uint64_t seed = 0;
  std::string estimator_kind;

  double ci_low(double zscore = 1.96) const { return value - zscore * stderr_; }
  double ci_high(double zscore = 1.96) const { return value + zscore * stderr_; }
  bool within(double target, double zscore) const {
    return std::abs(value - target) <= zscore * stderr_;
  }
};

inline bool ci_overlap(const EstimateWithCI& a, const EstimateWithCI& b,
                       double zscore = 1.96) {
  return a.ci_low(zscore) <= b.ci_high(zscore) && b.ci_low(zscore) <= a.ci_high(zscore);
}

inline double combined_se(double se_a, double se_b) {
  return std::sqrt(se_a * se_a + se_b * se_b);
}

// Sum/sum-of-squares accumulator. Merging is associative and commutative, so
// chunked parallel reduction in a fixed chunk order reproduces the serial sum.
struct MeanAcc {
  uint64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  void merge(const MeanAcc& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double stderr_() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
  EstimateWithCI estimate(uint64_t seed = 0, std::string kind = {}) const {
    return EstimateWithCI{mean(), stderr_(), n, seed, std::move(kind)};
  }
};

// Bernoulli counter; SE from the binomial variance.
struct HitAcc {
  uint64_t n = 0;
  uint64_t hits = 0;

  void add(bool hit) {
    ++n;
    hits += hit ? 1 : 0;
  }
  void merge(const HitAcc& o) {
    n += o.n;
    hits += o.hits;
  }
  double p() const { return n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0; }
  double stderr_() const {
    if (!n) return 0.0;
    const double ph = p();
    return std::sqrt(ph * (1.0 - ph) / static_cast<double>(n));
  }
  EstimateWithCI estimate(uint64_t seed = 0, std::string kind = {}) const {
    return EstimateWithCI{p(), stderr_(), n, seed, std::move(kind)};
  }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// P(min_{1<=j<=n} S_j >= 0) for a symmetric continuous walk: C(2n,n) 4^-n.
// Distribution-free (Sparre-Andersen).
inline double sparre_andersen_stay_positive(int n) {
  return std::exp(std::lgamma(2.0 * n + 1.0) - 2.0 * std::lgamma(n + 1.0) -
                  2.0 * n * std::log(2.0));
}

// Asymptotic Kolmogorov distribution with Stephens' finite-n correction.
inline double ks_pvalue(double statistic, uint64_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * lambda * lambda * k * k);
    p += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  p *= 2.0;
  return std::clamp(p, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// One-sample KS against a cdf; sorts a copy of the sample.
inline KsResult ks_test(std::vector<double> sample,
                        const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return {d, ks_pvalue(d, sample.size())};
}

// Two-sample KS; p-value from the asymptotic law at the effective size.
inline KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_test_two_sample: empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  return {d, ks_pvalue(d, static_cast<uint64_t>(ne))};
}

namespace detail {

// Regularized incomplete gamma Q(a, x), series/continued-fraction split.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) by series, return 1 - P.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Q(a,x) by Lentz continued fraction.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - lg);
}

}  // namespace detail

// Survival function of chi-square with k degrees of freedom.
inline double chi_square_sf(double x, int k) {
  return detail::gamma_q(0.5 * k, 0.5 * x);
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
};

// Pearson chi-square of observed counts against expected counts. Bins with
// expected < 5 are pooled into their neighbor.
inline ChiSquareResult chi_square_test(const std::vector<double>& observed,
                                       const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_test: size mismatch");
  double stat = 0.0;
  int used = 0;
  double pool_obs = 0.0, pool_exp = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    pool_obs += observed[i];
    pool_exp += expected[i];
    if (pool_exp >= 5.0) {
      const double diff = pool_obs - pool_exp;
      stat += diff * diff / pool_exp;
      ++used;
      pool_obs = pool_exp = 0.0;
    }
  }
  if (pool_exp > 0.0) {
    const double diff = pool_obs - pool_exp;
    stat += diff * diff / pool_exp;
    ++used;
  }
  const int dof = std::max(1, used - 1);
  return {stat, dof, chi_square_sf(stat, dof)};
}

}  // namespace brw
