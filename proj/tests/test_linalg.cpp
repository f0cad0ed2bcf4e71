#include <gtest/gtest.h>

#include <random>

#include "qsw/core_model.hpp"
#include "qsw/linalg.hpp"

using namespace qsw;

namespace {

Eigen::MatrixXcd random_matrix(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

} // namespace

TEST(PivotedLU, SolvesRandomSystems) {
  std::mt19937 rng(7);
  for (int n : {1, 2, 5, 17, 40}) {
    const auto a = random_matrix(n, rng);
    const Eigen::VectorXcd b = random_matrix(n, rng).col(0);
    const PivotedLU<std::complex<double>> lu(a);
    ASSERT_FALSE(lu.singular());
    const Eigen::VectorXcd x = lu.solve(b);
    EXPECT_LT((a * x - b).norm(), 1e-11 * b.norm()) << n;
    EXPECT_LT(std::abs(lu.determinant() - a.determinant()), 1e-9 * std::abs(a.determinant()));
  }
}

TEST(PivotedLU, ConditionNumberIsExactOneNorm) {
  std::mt19937 rng(11);
  const auto a = random_matrix(12, rng);
  const Eigen::MatrixXcd inv = a.inverse();
  auto norm1 = [](const Eigen::MatrixXcd& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); };
  const PivotedLU<std::complex<double>> lu(a);
  EXPECT_NEAR(lu.condition1(), norm1(a) * norm1(inv), 1e-8 * norm1(a) * norm1(inv));
}

TEST(PivotedLU, DetectsSingularMatrix) {
  Eigen::MatrixXd a(3, 3);
  a << 1, 2, 3, 2, 4, 6, 0, 0, 0;
  const PivotedLU<double> lu(a);
  EXPECT_TRUE(lu.singular());
}

TEST(PivotedLU, UsesLargestPivot) {
  // the first elimination step must pick the 100 entry
  Eigen::MatrixXd a(3, 3);
  a << 1e-20, 1, 0, 1, 0, 100, 0, 1, 1;
  const PivotedLU<double> lu(a);
  const Eigen::Vector3d b(1, 2, 3);
  EXPECT_LT((a * lu.solve(b) - b).norm(), 1e-13);
}

TEST(Adjugate, TimesMatrixIsDeterminant) {
  std::mt19937 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Mat4 m = random_matrix(4, rng);
    const Mat4 prod = adjugate4(m) * m;
    EXPECT_LT((prod - m.determinant() * Mat4::Identity()).norm(), 1e-11);
  }
}
