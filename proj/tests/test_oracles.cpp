#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>

#include "qsw/direct_sim.hpp"
#include "qsw/genfun.hpp"
#include "qsw/oracles.hpp"

using namespace qsw;

namespace {

// At theta = pi/2 the walk is a Markov chain on (coin, x):
//   prob 1-p:  (R, x) -> (L, x-1),  (L, x) -> (R, x+1)
//   prob p/2:  (c, x) -> (c, x+1),  prob p/2: (c, x) -> (c, x-1)
// Generating matrices are accumulated over paths up to n_steps.
struct ChainSums {
  Eigen::Matrix2d returns = Eigen::Matrix2d::Zero(); // sum z^n P(at 0 at n), unmonitored
  Eigen::Matrix2d first = Eigen::Matrix2d::Zero();   // sum z^n P(first at 0 at n)
};

ChainSums pi_half_chain(double z, double p, int n_steps) {
  ChainSums out;
  for (int start = 0; start < 2; ++start) {
    const int w = n_steps + 1;
    std::vector<std::array<double, 2>> free_w(2 * w + 1, {0, 0}), mon(2 * w + 1, {0, 0});
    free_w[w][start] = mon[w][start] = 1.0;
    out.returns(start, start) += 1.0;
    double zn = 1.0;
    for (int n = 1; n <= n_steps; ++n) {
      zn *= z;
      auto step = [&](const std::vector<std::array<double, 2>>& in) {
        std::vector<std::array<double, 2>> nxt(2 * w + 1, {0, 0});
        for (int i = 1; i < 2 * w; ++i) {
          nxt[i - 1][1] += (1 - p) * in[i][0];
          nxt[i + 1][0] += (1 - p) * in[i][1];
          for (int c = 0; c < 2; ++c) {
            nxt[i + 1][c] += 0.5 * p * in[i][c];
            nxt[i - 1][c] += 0.5 * p * in[i][c];
          }
        }
        return nxt;
      };
      free_w = step(free_w);
      mon = step(mon);
      for (int c = 0; c < 2; ++c) {
        out.returns(c, start) += zn * free_w[w][c];
        out.first(c, start) += zn * mon[w][c];
        mon[w][c] = 0.0;
      }
    }
  }
  return out;
}

} // namespace

TEST(UnitaryOracle, KnownValues) {
  EXPECT_NEAR(recurrence_unitary(CoinAngle(pi / 4)), 2 / pi, 1e-15);
  EXPECT_NEAR(recurrence_unitary(CoinAngle(pi / 2)), 1.0, 1e-15);
  EXPECT_EQ(recurrence_unitary(CoinAngle(0.0)), 0.0);
}

TEST(PiHalfOracle, ReturnsMatchPathSums) {
  for (double p : {0.0, 0.1, 0.5, 0.9, 1.0})
    for (double z : {0.2, 0.35}) {
      const auto chain = pi_half_chain(z, p, 40);
      const auto g = pi_half_genfun(z, p);
      EXPECT_LT((chain.returns - g.returns).cwiseAbs().maxCoeff(), 1e-13) << p << ' ' << z;
      EXPECT_LT((chain.first - g.first_returns).cwiseAbs().maxCoeff(), 1e-13) << p << ' ' << z;
    }
}

TEST(PiHalfOracle, ShortPathTable) {
  // paths of length <= 10; the missing n >= 12 tail is O(z^12)
  const double z = 0.05;
  for (double p : {0.25, 0.75}) {
    const auto chain = pi_half_chain(z, p, 10);
    const auto g = pi_half_genfun(z, p);
    EXPECT_LT((chain.first - g.first_returns).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(PiHalfOracle, LimitMatrix) {
  const auto lim = pi_half_first_return_limit(0.5);
  EXPECT_NEAR(lim(0, 0), 1 - 0.5 * std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(lim(0, 1), 0.5 * std::sqrt(0.5), 1e-15);
  const auto near = pi_half_genfun(1 - 1e-12, 0.5).first_returns;
  EXPECT_LT((near - lim).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(PiHalfOracle, StableAtSmallP) {
  const auto a = pi_half_genfun(0.9, 0.0);
  const auto b = pi_half_genfun(0.9, 1e-9);
  EXPECT_LT((a.returns - b.returns).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_EQ(a.returns(0, 1), 0.0);
}

TEST(PiHalfOracle, MatchesSimulation) {
  for (double p : {0.1, 0.5}) {
    const auto s = return_series(WalkParams(pi / 2, p), 200, coin_projector_R());
    EXPECT_NEAR(weighted_return(s, 0.8), pi_half_recurrence(0.8, p), 1e-12);
  }
}

TEST(ClassicalOracle, CatalanSeries) {
  EXPECT_DOUBLE_EQ(classical_first_return(2), 0.5);
  EXPECT_DOUBLE_EQ(classical_first_return(4), 0.125);
  EXPECT_DOUBLE_EQ(classical_first_return(6), 0.0625);
  EXPECT_EQ(classical_first_return(5), 0.0);
  double acc = 0.0, zm = 1.0;
  const double z = 0.7;
  for (int m = 1; m <= 200; ++m) {
    zm *= z;
    if (m >= 2) acc += classical_first_return(m) * zm;
  }
  EXPECT_NEAR(acc, classical_first_return_genfun(z), 1e-14);
}
