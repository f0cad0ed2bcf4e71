#pragma once

// Coins, Kraus families and their momentum representation.
//
// Conventions shared by every other header:
//  * coin basis ordering is (R, L) = (0, 1);
//  * the right shift T maps to multiplication by e^{-ik} in momentum space,
//    so U(k) = diag(e^{-ik}, e^{ik}) C;
//  * a density matrix element rho_{(c,x),(c',y)} is vectorized with the ket
//    coin c first and the bra coin c' second: the 4x4 coin-pair index is
//    2*c + c'. Momentum k1 is conjugate to the ket position, k2 to the bra.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsw/errors.hpp"

namespace qsw {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

inline constexpr double pi = std::numbers::pi;

enum class Model { Balanced, Correlated };

inline const char* model_name(Model m) {
  return m == Model::Balanced ? "balanced" : "correlated";
}

class CoinAngle {
public:
  explicit CoinAngle(double theta) : theta_(theta) {
    // Allow a few ulps of slack so expressions like 0.5*pi survive rounding.
    constexpr double slack = 1e-12;
    if (!(theta >= -slack && theta <= pi / 2 + slack))
      throw ParameterError("coin angle " + std::to_string(theta) +
                           " outside [0, pi/2]");
    theta_ = std::clamp(theta, 0.0, pi / 2);
  }
  double radians() const noexcept { return theta_; }

private:
  double theta_;
};

struct WalkParams {
  CoinAngle theta;
  double p;
  Model model;

  WalkParams(CoinAngle th, double prob, Model m = Model::Balanced)
      : theta(th), p(prob), model(m) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ParameterError("probability p=" + std::to_string(p) +
                           " outside [0, 1]");
  }
  WalkParams(double th, double prob, Model m = Model::Balanced)
      : WalkParams(CoinAngle(th), prob, m) {}
};

struct KrausTerm {
  Mat2 coin;
  int shift;
};

// A position-homogeneous operator sum_terms coin (x) T^shift.
struct TranslationKraus {
  std::vector<KrausTerm> terms;

  Mat2 momentum(double k) const {
    Mat2 out = Mat2::Zero();
    for (const auto& t : terms)
      out += t.coin * std::polar(1.0, -t.shift * k);
    return out;
  }
};

struct TranslationKrausFamily {
  std::vector<TranslationKraus> kraus;
  std::string label;
  // Set when the family was built from WalkParams; lets the resolvent pick
  // the closed-form determinant route for the balanced model.
  std::optional<WalkParams> source;

  bool real_blocks(double tol = 0.0) const {
    for (const auto& e : kraus)
      for (const auto& t : e.terms)
        if (t.coin.imag().cwiseAbs().maxCoeff() > tol) return false;
    return true;
  }

  Mat2 completeness(double k) const {
    Mat2 sum = Mat2::Zero();
    for (const auto& e : kraus) {
      Mat2 m = e.momentum(k);
      sum += m.adjoint() * m;
    }
    return sum;
  }
};

inline Eigen::Matrix2d coin_matrix(CoinAngle theta) {
  const double c = std::cos(theta.radians());
  const double s = std::sin(theta.radians());
  Eigen::Matrix2d m;
  m << c, s, s, -c;
  return m;
}

// e^{i phi} e^{i alpha sigma_z} C_theta e^{i beta sigma_z}: a general U(2) coin.
inline Mat2 general_coin(double theta, double phi, double alpha, double beta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 m;
  m << c, s, s, -c;
  const Mat2 left = Eigen::Vector2cd(std::polar(1.0, alpha), std::polar(1.0, -alpha)).asDiagonal();
  const Mat2 right = Eigen::Vector2cd(std::polar(1.0, beta), std::polar(1.0, -beta)).asDiagonal();
  return std::polar(1.0, phi) * (left * m * right);
}

namespace detail {

// S (coin (x) I): the R row moves right, the L row moves left.
inline TranslationKraus shifted_coin(const Mat2& coin, double scale) {
  Mat2 upper = Mat2::Zero(), lower = Mat2::Zero();
  upper.row(0) = scale * coin.row(0);
  lower.row(1) = scale * coin.row(1);
  return TranslationKraus{{{upper, +1}, {lower, -1}}};
}

inline TranslationKraus single_term(const Mat2& coin, int shift) {
  return TranslationKraus{{{coin, shift}}};
}

} // namespace detail

/// Incoherent part of the walk with the probability p factored out: the
/// Kraus operators a p=1 walk would use. Reused by the perturbation expansion.
inline std::vector<TranslationKraus> classical_branches(CoinAngle theta, Model model) {
  if (model == Model::Balanced) {
    const Mat2 half = Mat2::Identity() * std::sqrt(0.5);
    return {detail::single_term(half, +1), detail::single_term(half, -1)};
  }
  const Mat2 coin = coin_matrix(theta).cast<cplx>();
  std::vector<TranslationKraus> out;
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) {
      Mat2 block = Mat2::Zero();
      block(u, v) = coin(u, v);
      out.push_back(detail::single_term(block, u == 0 ? +1 : -1));
    }
  return out;
}

/// Balanced interpolation with an arbitrary (possibly complex) coin.
inline TranslationKrausFamily kraus_balanced(const Mat2& coin, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p outside [0, 1]");
  TranslationKrausFamily fam;
  fam.label = "balanced";
  fam.kraus.push_back(detail::shifted_coin(coin, std::sqrt(1.0 - p)));
  const Mat2 id = Mat2::Identity() * std::sqrt(p / 2);
  fam.kraus.push_back(detail::single_term(id, +1));
  fam.kraus.push_back(detail::single_term(id, -1));
  return fam;
}

inline TranslationKrausFamily kraus_balanced(const WalkParams& params) {
  if (params.model != Model::Balanced)
    throw ParameterError("kraus_balanced requires the balanced model");
  auto fam = kraus_balanced(coin_matrix(params.theta).cast<cplx>(), params.p);
  fam.source = params;
  return fam;
}

inline TranslationKrausFamily kraus_correlated(const WalkParams& params) {
  if (params.model != Model::Correlated)
    throw ParameterError("kraus_correlated requires the correlated model");
  TranslationKrausFamily fam;
  fam.label = "correlated";
  fam.source = params;
  fam.kraus.push_back(detail::shifted_coin(coin_matrix(params.theta).cast<cplx>(),
                                           std::sqrt(1.0 - params.p)));
  const double scale = std::sqrt(params.p);
  for (auto branch : classical_branches(params.theta, Model::Correlated)) {
    for (auto& t : branch.terms) t.coin *= scale;
    fam.kraus.push_back(std::move(branch));
  }
  return fam;
}

inline TranslationKrausFamily kraus_family(const WalkParams& params) {
  return params.model == Model::Balanced ? kraus_balanced(params)
                                         : kraus_correlated(params);
}

/// V(k1,k2) = sum_j E_j(k1) (x) E_j(k2), the vectorized step in momentum space.
inline Mat4 momentum_kernel(const TranslationKrausFamily& family, double k1, double k2) {
  if (!family.real_blocks())
    throw UnsupportedFamilyError("momentum_kernel needs real coin blocks; family '" +
                                 family.label + "' is complex");
  Mat4 v = Mat4::Zero();
  for (const auto& e : family.kraus) {
    const Mat2 a = e.momentum(k1);
    const Mat2 b = e.momentum(k2);
    for (int c = 0; c < 2; ++c)
      for (int cp = 0; cp < 2; ++cp)
        for (int d = 0; d < 2; ++d)
          for (int dp = 0; dp < 2; ++dp)
            v(2 * c + cp, 2 * d + dp) += a(c, d) * b(cp, dp);
  }
  return v;
}

} // namespace qsw
