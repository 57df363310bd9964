#include "doctest.h"

#include <cmath>
#include <vector>

#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

using namespace brw;

TEST_CASE("normal cdf reference points") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(normal_cdf(-3.0) == doctest::Approx(0.001349898).epsilon(1e-4));
}

TEST_CASE("stay-positive probability is the central binomial term") {
  // C(2n, n) 4^-n; dyadic rationals, so the comparison can be tight.
  CHECK(sparre_andersen_stay_positive(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sparre_andersen_stay_positive(5) ==
        doctest::Approx(252.0 / 1024.0).epsilon(1e-12));
  CHECK(sparre_andersen_stay_positive(10) ==
        doctest::Approx(184756.0 / 1048576.0).epsilon(1e-12));
}

TEST_CASE("accumulator merge: identical chunking is bitwise reproducible") {
  std::vector<double> xs(1000);
  RngStream rng(3, 0);
  for (auto& x : xs) x = rng.next_normal();
  auto chunked = [&]() {
    MeanAcc left, right;
    for (size_t i = 0; i < xs.size(); ++i) (i < 500 ? left : right).add(xs[i]);
    left.merge(right);
    return left;
  };
  const MeanAcc a = chunked(), b = chunked();
  CHECK(a.sum == b.sum);  // fixed chunk split -> bitwise identical reduction
  CHECK(a.sumsq == b.sumsq);
  MeanAcc whole;
  for (double x : xs) whole.add(x);
  CHECK(a.n == whole.n);
  CHECK(a.mean() == doctest::Approx(whole.mean()).epsilon(1e-12));
  CHECK(a.variance() == doctest::Approx(whole.variance()).epsilon(1e-12));
}

TEST_CASE("ks test separates the true law from a shifted one") {
  RngStream rng(4, 0);
  std::vector<double> sample(50000);
  for (auto& v : sample) v = rng.next_normal();
  const auto good = ks_test(sample, [](double x) { return normal_cdf(x); });
  CHECK(good.p_value > 1e-3);
  const auto bad = ks_test(sample, [](double x) { return normal_cdf(x - 0.05); });
  CHECK(bad.p_value < 1e-6);
}

TEST_CASE("chi-square survival function at the classic 5% point") {
  // P(Z^2 > 3.841459) = 2 Phi(-1.959964) = 0.05 for one degree of freedom.
  CHECK(chi_square_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(chi_square_sf(0.0, 3) == doctest::Approx(1.0));
}

TEST_CASE("confidence interval overlap") {
  EstimateWithCI a{1.0, 0.1, 100, 0, "a"};
  EstimateWithCI b{1.3, 0.1, 100, 0, "b"};
  EstimateWithCI c{2.0, 0.1, 100, 0, "c"};
  CHECK(ci_overlap(a, b));
  CHECK_FALSE(ci_overlap(a, c));
  CHECK(a.within(1.2, 4.0));
  CHECK_FALSE(a.within(1.5, 4.0));
}

TEST_CASE("hit accumulator binomial standard error") {
  HitAcc acc;
  for (int i = 0; i < 1000; ++i) acc.add(i % 4 == 0);
  CHECK(acc.p() == doctest::Approx(0.25));
  CHECK(acc.stderr_() == doctest::Approx(std::sqrt(0.25 * 0.75 / 1000.0)));
}
