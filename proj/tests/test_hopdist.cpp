#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "aoisched/hopdist.hpp"

using namespace aoisched::hopdist;

namespace {

// Random chain of n hops with pairwise separation of at least `gap`.
std::vector<double> separated_chain(std::mt19937_64& rng, std::size_t n, double gap) {
  std::uniform_real_distribution<double> u(0.0, 0.95);
  for (;;) {
    std::vector<double> p(n);
    for (auto& x : p) x = u(rng);
    bool ok = true;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) ok = ok && std::abs(p[a] - p[b]) >= gap;
    }
    if (ok) return p;
  }
}

}  // namespace

TEST(HopChainTest, Validates) {
  EXPECT_THROW(HopChain({}), std::invalid_argument);
  EXPECT_THROW(HopChain({1.0}), std::invalid_argument);
  EXPECT_THROW(HopChain({-0.1}), std::invalid_argument);
}

TEST(Pmf, Examples) {
  EXPECT_DOUBLE_EQ(pmf_closed(HopChain({0.5}), 2), 0.125);
  EXPECT_NEAR(pmf_closed(HopChain({0.5, 0.25}), 1), 0.28125, 1e-15);
  EXPECT_NEAR(pmf_closed(HopChain({0.5, 0.25, 0.125}), 0), 0.328125, 1e-15);
  EXPECT_NEAR(pmf_oracle(HopChain({0.5, 0.25}), 1), 0.28125, 1e-15);
  EXPECT_NEAR(pmf_oracle(HopChain({0.5, 0.25, 0.125}), 0), 0.328125, 1e-15);
  EXPECT_EQ(pmf_closed(HopChain({0.5}), -1), 0.0);
}

TEST(Pmf, DispatchFallsBackToConvolution) {
  const HopChain four({0.1, 0.2, 0.3, 0.4});
  EXPECT_THROW(pmf_closed(four, 2), std::invalid_argument);
  EXPECT_EQ(pmf(four, 2), pmf_oracle(four, 2));
  const HopChain close({0.3, 0.3 + 1e-8, 0.6});
  EXPECT_EQ(pmf(close, 5), pmf_oracle(close, 5));
}

TEST(Pmf, SingleHopClosedEqualsOracle) {
  for (double p : {0.0, 0.1, 0.5, 0.9}) {
    for (long d = 0; d <= 30; ++d) EXPECT_DOUBLE_EQ(pmf_closed(HopChain({p}), d), pmf_oracle(HopChain({p}), d));
  }
}

TEST(Pmf, ClosedFormsMatchConvolution) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 1000; ++k) {
    const auto p = separated_chain(rng, 2 + static_cast<std::size_t>(k % 2), 0.05);
    const HopChain c(p);
    for (long d = 0; d <= 50; ++d) ASSERT_NEAR(pmf_closed(c, d), pmf_oracle(c, d), 1e-12) << k << ' ' << d;
  }
}

TEST(Pmf, EqualProbabilityLimit) {
  for (double p : {0.1, 0.4, 0.7}) {
    const HopChain c({p, p});
    EXPECT_THROW(pmf_closed(c, 3), SingularityError);
    const HopChain near({p, p + 1e-4});
    for (long d = 0; d <= 40; ++d) {
      const double want = (1 - p) * (1 - p) * static_cast<double>(d + 1) * std::pow(p, static_cast<double>(d));
      EXPECT_NEAR(pmf_oracle(c, d), want, 1e-14);
      EXPECT_NEAR(pmf(c, d), want, 1e-14);
      EXPECT_NEAR(pmf_closed(near, d), want, 1e-3 * static_cast<double>(d + 1) * want / p + 1e-12);
    }
  }
}

TEST(Pmf, NormalizationAndNonNegativity) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const HopChain c(separated_chain(rng, 2 + static_cast<std::size_t>(k % 2), 0.05));
    double sum = 0.0;
    long d = 0;
    for (; sum <= 1.0 - 1e-10 && d < 5000; ++d) {
      const double f = pmf_closed(c, d);
      ASSERT_GE(f, -1e-15);
      sum += f;
      ASSERT_LE(sum, 1.0 + 1e-12);
    }
    EXPECT_GT(sum, 1.0 - 1e-9);
  }
}

TEST(Pmf, HopOrderInvariance) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    auto p = separated_chain(rng, 3, 0.05);
    std::sort(p.begin(), p.end());
    const HopChain base(p);
    do {
      const HopChain perm(p);
      for (long d = 0; d <= 20; ++d) ASSERT_NEAR(pmf_closed(perm, d), pmf_closed(base, d), 1e-12);
    } while (std::next_permutation(p.begin(), p.end()));
  }
}

TEST(MeanAge, Examples) {
  EXPECT_NEAR(mean_age(HopChain({0.5})), 1.0, 1e-10);
  EXPECT_NEAR(mean_age(HopChain({0.5, 0.25})), 4.0 / 3.0, 1e-10);
  EXPECT_EQ(mean_age(HopChain({0.0, 0.0, 0.0})), 0.0);
  double truncated = 0.0;
  for (long d = 0; d < 400; ++d) truncated += static_cast<double>(d) * pmf_oracle(HopChain({0.5, 0.25}), d);
  EXPECT_NEAR(truncated, 4.0 / 3.0, 1e-10);
}

TEST(MeanAge, SumOfGeometricMeans) {
  const std::vector<double> p{0.1, 0.6, 0.3, 0.8};
  double want = 0.0;
  for (double x : p) want += x / (1 - x);
  EXPECT_NEAR(mean_age(HopChain(p)), want, 1e-9);
}
