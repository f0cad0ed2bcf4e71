#include <gtest/gtest.h>

#include "qsw/direct_sim.hpp"
#include "qsw/perturbation.hpp"

using namespace qsw;

namespace {

double return_at(double th, double p, Model m, int t) {
  return return_series(WalkParams(th, p, m), t, coin_projector_R()).return_prob[t];
}

// Richardson-extrapolated one-sided derivative at p = 0.
double dR_dp(double th, Model m, int t) {
  const double h = 1e-4;
  const double r0 = return_at(th, 0.0, m, t);
  const double d1 = (return_at(th, h, m, t) - r0) / h;
  const double d2 = (return_at(th, 2 * h, m, t) - r0) / (2 * h);
  return 2 * d1 - d2;
}

} // namespace

TEST(Slope, MatchesFiniteDifferenceOfReturnProbability) {
  for (Model m : {Model::Balanced, Model::Correlated})
    for (double th : {pi / 4, 0.3 * pi, 2 * pi / 5}) {
      const auto b = slope_series(CoinAngle(th), m, 12);
      for (int t : {2, 4, 7, 12}) EXPECT_NEAR(b[t - 1], dR_dp(th, m, t), 1e-6) << model_name(m) << ' ' << th << ' ' << t;
    }
}

TEST(Slope, CorrelatedVanishesForShortTimes) {
  for (double th : {0.2, pi / 4, 2 * pi / 5, 1.5}) {
    const auto b = slope_series(CoinAngle(th), Model::Correlated, 5);
    for (double v : b) EXPECT_NEAR(v, 0.0, 1e-14) << th;
  }
}

TEST(Slope, HadamardIsPositive) {
  const auto b = slope_series(CoinAngle(pi / 4), Model::Balanced, 60);
  EXPECT_GT(b.back(), 0.0);
}

TEST(Slope, SeriesAgreesWithSingleEvaluations) {
  const auto b = slope_series(CoinAngle(0.3 * pi), Model::Balanced, 30);
  EXPECT_EQ(b[29], slope_balanced(CoinAngle(0.3 * pi), 30));
  EXPECT_EQ(b[9], slope_balanced(CoinAngle(0.3 * pi), 10));
}

TEST(Slope, ThetaStarBracketing) {
  EXPECT_THROW(theta_star(40, 0.1 * pi, 0.2 * pi), BracketError);
  const double ts = theta_star(40, 0.25 * pi, 0.35 * pi, 1e-8);
  EXPECT_GT(ts, 0.25 * pi);
  EXPECT_LT(ts, 0.35 * pi);
  EXPECT_NEAR(slope_balanced(CoinAngle(ts), 40), 0.0, 1e-6);
}

TEST(Slope, UnreliableRegionFlag) {
  EXPECT_FALSE(slope_limit_unreliable(CoinAngle(0.4 * pi)));
  EXPECT_TRUE(slope_limit_unreliable(CoinAngle(0.46 * pi)));
}
