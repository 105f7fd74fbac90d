#include <gtest/gtest.h>

#include <cmath>

#include "wavail/geometry.hpp"
#include "wavail/radio.hpp"

using namespace wavail;

namespace {

const BoundingBox kBox{.width = 10.0, .height = 10.0, .origin = {0.0, 0.0}};

Deployment line_deployment(double d_serv, double d_int, double eta = 4.0) {
  // probe at (5, 5); serving AP to the right, interferer to the left
  return {.aps = {{5.0 + d_serv, 5.0}, {5.0 - d_int, 5.0}}, .box = kBox, .eta = eta, .seed = 0};
}

double empirical_coverage(Point2D z, ApIndex j, const Deployment& d, double theta, std::size_t draws,
                          std::uint64_t seed) {
  RandomStream rng(seed, Stream::fading);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) hits += sample_sir(z, j, d, draw_fading(d.size(), rng)) >= theta;
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace

TEST(Pathloss, PowerLaw) {
  EXPECT_DOUBLE_EQ(pathloss({0, 0}, {1, 0}, 4.0), 1.0);
  EXPECT_DOUBLE_EQ(pathloss({0, 0}, {0, 2}, 4.0), 0.0625);
  EXPECT_NEAR(pathloss({1, 1}, {4, 1}, 2.0), 1.0 / 9.0, 1e-15);
  EXPECT_THROW(pathloss({1, 1}, {1, 1}, 4.0), SingularityError);
}

TEST(SampleSir, SymmetricEqualGainsGiveUnity) {
  const Deployment d{.aps = {{3, 5}, {7, 5}}, .box = kBox, .eta = 4.0, .seed = 0};
  const FadingSample f{{0.7, 0.7}};
  EXPECT_DOUBLE_EQ(sample_sir({5, 5}, 0, d, f), 1.0);
}

TEST(SampleSir, ZeroServingGain) {
  const Deployment d = generate_deployment(5, kBox, 4.0, 3);
  FadingSample f{{0.0, 1.0, 2.0, 0.5, 1.5}};
  EXPECT_EQ(sample_sir({5.1, 4.9}, 0, d, f), 0.0);
}

TEST(SampleSir, MatchesTermByTermSummation) {
  RandomStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Deployment d = generate_deployment(2 + rng.below(20), kBox, 3.0 + rng.uniform(), rng.next());
    const Point2D z{rng.uniform(0, 10), rng.uniform(0, 10)};
    const ApIndex j = nearest_ap(z, d);
    const FadingSample f = draw_fading(d.size(), rng);
    const double p_tx = 0.2;
    double signal = 0.0, interference = 0.0;
    for (ApIndex k = 0; k < d.size(); ++k) {
      const double rx = p_tx * f.gains[k] / std::pow(std::hypot(z.x - d.aps[k].x, z.y - d.aps[k].y), d.eta);
      (k == j ? signal : interference) += rx;
    }
    EXPECT_NEAR(sample_sir(z, j, d, f), signal / interference, 1e-12 * signal / interference);
  }
}

TEST(SampleSir, UndefinedWithoutInterferers) {
  const Deployment d{.aps = {{3, 3}}, .box = kBox, .eta = 4.0, .seed = 0};
  EXPECT_THROW(sample_sir({1, 1}, 0, d, FadingSample{{1.0}}), NoInterferenceError);
}

TEST(CoverageProbability, ClosedFormExamples) {
  // equal distances, theta = 0 dB
  const Deployment eq{.aps = {{3, 5}, {7, 5}}, .box = kBox, .eta = 4.0, .seed = 0};
  EXPECT_DOUBLE_EQ(coverage_probability({5, 5}, 0, eq, 1.0), 0.5);
  // d_serv = 1, d_int = 2
  const Deployment d = line_deployment(1.0, 2.0);
  EXPECT_NEAR(coverage_probability({5, 5}, 0, d, 1.0), 16.0 / 17.0, 1e-15);
  // no interferers
  const Deployment one{.aps = {{2, 2}}, .box = kBox, .eta = 4.0, .seed = 0};
  EXPECT_EQ(coverage_probability({9, 9}, 0, one, 1e6), 1.0);
}

TEST(CoverageProbability, MonteCarloOracleForSixteenSeventeenths) {
  const Deployment d = line_deployment(1.0, 2.0);
  constexpr std::size_t draws = 1'000'000;
  const double p = 16.0 / 17.0;
  const double est = empirical_coverage({5, 5}, 0, d, 1.0, draws, 99);
  EXPECT_NEAR(est, p, 3.0 * std::sqrt(p * (1 - p) / draws));
}

TEST(CoverageProbability, CoincidenceConventions) {
  const Deployment d{.aps = {{3, 5}, {7, 5}, {5, 8}}, .box = kBox, .eta = 4.0, .seed = 0};
  EXPECT_EQ(coverage_probability({3, 5}, 0, d, 1.0), 1.0);
  EXPECT_EQ(coverage_probability({7, 5}, 0, d, 1.0), 0.0);
}

TEST(CoverageProbability, MonteCarloConsistencyOnRandomPairs) {
  RandomStream rng(31);
  constexpr std::size_t draws = 20000;
  int within = 0;
  constexpr int pairs = 30;
  for (int i = 0; i < pairs; ++i) {
    const Deployment d = generate_deployment(2 + rng.below(9), kBox, 4.0, rng.next());
    const Point2D z{rng.uniform(0, 10), rng.uniform(0, 10)};
    const ApIndex j = nearest_ap(z, d);
    const double theta = db_to_linear(rng.uniform(-5, 5));
    const double p = coverage_probability(z, j, d, theta);
    const double est = empirical_coverage(z, j, d, theta, draws, rng.next());
    within += std::abs(est - p) <= 3.0 * std::sqrt(p * (1 - p) / draws) + 1e-12;
  }
  EXPECT_GE(within, pairs - 2);
}

TEST(CoverageProbability, StrictlyDecreasingInTheta) {
  const Deployment d = generate_deployment(8, kBox, 4.0, 17);
  const Point2D z{4.2, 6.1};
  const ApIndex j = nearest_ap(z, d);
  double prev = 2.0;
  for (double db = -20; db <= 20; db += 0.5) {
    const double p = coverage_probability(z, j, d, db_to_linear(db));
    EXPECT_LT(p, prev);
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, 1.0);
    prev = p;
  }
}

TEST(CoverageProbability, NonIncreasingAsInterfererApproaches) {
  Deployment d{.aps = {{5, 5}, {9, 5}, {1, 9}}, .box = kBox, .eta = 4.0, .seed = 0};
  const Point2D z{6, 5};
  double prev = 1.0;
  for (double x = 9.5; x > 6.5; x -= 0.25) {
    d.aps[1] = {x, 5};
    const double p = coverage_probability(z, 0, d, 1.0);
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(CoverageProbability, BelowOneWhenInterferersExist) {
  RandomStream rng(8);
  for (int i = 0; i < 200; ++i) {
    const Deployment d = generate_deployment(2 + rng.below(5), kBox, 4.0, rng.next());
    const Point2D z{rng.uniform(0, 10), rng.uniform(0, 10)};
    const double p = coverage_probability(z, nearest_ap(z, d), d, db_to_linear(-30));
    EXPECT_LT(p, 1.0);
    EXPECT_GT(p, 0.0);
  }
}

TEST(Omega, ThresholdIncludesBoundary) {
  const Deployment eq{.aps = {{3, 5}, {7, 5}}, .box = kBox, .eta = 4.0, .seed = 0};
  EXPECT_TRUE(omega({5, 5}, 0, eq, RadioParams{.theta_db = 0.0, .alpha = 0.5}));
  EXPECT_FALSE(omega({5, 5}, 0, eq, RadioParams{.theta_db = 0.0, .alpha = 0.7}));
  const Deployment d = line_deployment(1.0, 2.0);
  EXPECT_TRUE(omega({5, 5}, 0, d, RadioParams{.theta_db = 0.0, .alpha = 0.9}));
}

TEST(Omega, TransmitPowerDoesNotMatter) {
  const Deployment d = generate_deployment(10, kBox, 4.0, 4);
  RandomStream rng(4);
  for (int i = 0; i < 500; ++i) {
    const Point2D z{rng.uniform(0, 10), rng.uniform(0, 10)};
    const ApIndex j = nearest_ap(z, d);
    const RadioParams low{.theta_db = 0, .alpha = 0.7, .eta = 4, .p_tx = 1e-3};
    const RadioParams high{.theta_db = 0, .alpha = 0.7, .eta = 4, .p_tx = 40.0};
    EXPECT_EQ(omega(z, j, d, low), omega(z, j, d, high));
  }
}

TEST(RadioParams, Validation) {
  EXPECT_NO_THROW((RadioParams{.theta_db = 0, .alpha = 0.5}.validate()));
  EXPECT_THROW((RadioParams{.theta_db = 0, .alpha = 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((RadioParams{.theta_db = 0, .alpha = 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((RadioParams{.theta_db = 0, .alpha = 0.5, .eta = 2.0}.validate()), InvalidArgument);
  EXPECT_NEAR(RadioParams{.theta_db = 10.0}.theta_linear(), 10.0, 1e-12);
  EXPECT_NEAR(RadioParams{.theta_db = -10.0}.theta_linear(), 0.1, 1e-15);
}

TEST(Fading, UnitMeanExponential) {
  RandomStream rng(1234, Stream::fading);
  double sum = 0.0, sum2 = 0.0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.exponential();
    ASSERT_GE(g, 0.0);
    sum += g;
    sum2 += g * g;
  }
  EXPECT_NEAR(sum / n, 1.0, 0.01);
  EXPECT_NEAR(sum2 / n, 2.0, 0.05);
}
