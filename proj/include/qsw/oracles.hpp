#pragma once

// Closed-form reference values: the unitary recurrence probability, the
// theta = pi/2 generating functions, and the balanced classical walk.

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "qsw/core_model.hpp"
#include "qsw/errors.hpp"

namespace qsw {

/// Recurrence probability of the unitary walk, (2/pi)[theta(1 - cot^2) + cot].
/// theta = 0 is exactly 0: the walker only moves in one direction.
inline double recurrence_unitary(CoinAngle theta) {
  const double th = theta.radians();
  if (th == 0.0) return 0.0;
  const double cot = std::cos(th) / std::sin(th);
  return (2.0 / pi) * (th * (1.0 - cot * cot) + cot);
}

struct PiHalfSymbols {
  double a, b, c, u, v;

  PiHalfSymbols(double z, double p) {
    if (!(z >= 0.0 && z < 1.0)) throw ParameterError("pi/2 closed form needs 0 <= z < 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p outside [0, 1]");
    a = 1.0 - (1.0 - p) * z;
    b = 1.0 + (1.0 - p) * z;
    c = p * z;
    // a - c = 1 - z > 0 and b - c = 1 + (1 - 2p) z >= 1 - z > 0
    u = std::sqrt((a - c) * (a + c));
    v = std::sqrt((b - c) * (b + c));
  }
};

struct PiHalfGenfun {
  Eigen::Matrix2d returns;       // sum_n z^n R_n
  Eigen::Matrix2d first_returns; // sum_n z^n Q_n = I - returns^{-1}
};

/// theta = pi/2 generating functions, coin order (R, L).
inline PiHalfGenfun pi_half_genfun(double z, double p) {
  const PiHalfSymbols s(z, p);
  // a/(uc) - b/(vc) rewritten without the 0/0 at c = 0:
  // a/u - 1 = x / (sqrt(1-x)(1+sqrt(1-x))), x = c^2/a^2.
  auto h = [](double x) {
    const double r = std::sqrt(1.0 - x);
    return r * (1.0 + r);
  };
  const double off =
      s.c * (1.0 / (s.a * s.a * h(s.c * s.c / (s.a * s.a))) -
             1.0 / (s.b * s.b * h(s.c * s.c / (s.b * s.b))));
  const double diag = 1.0 / s.u + 1.0 / s.v;

  PiHalfGenfun out;
  out.returns << 0.5 * diag, 0.5 * off, 0.5 * off, 0.5 * diag;
  Eigen::Matrix2d inv;
  const double id = s.a * s.v + s.b * s.u;
  const double io = s.c * s.u - s.c * s.v;
  inv << 0.5 * id, 0.5 * io, 0.5 * io, 0.5 * id;
  out.first_returns = Eigen::Matrix2d::Identity() - inv;
  return out;
}

/// z -> 1 limit of the first-return generating matrix.
inline Eigen::Matrix2d pi_half_first_return_limit(double p) {
  const double s = p * std::sqrt(1.0 - p);
  Eigen::Matrix2d m;
  m << 1.0 - s, s, s, 1.0 - s;
  return m;
}

/// sum_m q_m z^{m-1} for theta = pi/2 from an initial R coin, the quantity
/// the resolvent route estimates.
inline double pi_half_recurrence(double z, double p) {
  if (!(z > 0.0)) throw ParameterError("pi_half_recurrence needs z > 0");
  const auto g = pi_half_genfun(z, p);
  return (g.first_returns(0, 0) + g.first_returns(1, 0)) / z;
}

/// First return of the balanced classical walk at step m:
/// binom(m, m/2) 2^{-m} / (m - 1) for even m >= 2, zero for odd m.
inline double classical_first_return(int m) {
  if (m < 2) throw ParameterError("classical_first_return needs m >= 2");
  if (m % 2) return 0.0;
  double central = 1.0; // binom(2j, j) / 4^j
  for (int j = 1; j <= m / 2; ++j) central *= (2.0 * j - 1.0) / (2.0 * j);
  return central / (m - 1);
}

/// sum_m f_m z^m = 1 - sqrt(1 - z^2) for the balanced classical walk.
inline double classical_first_return_genfun(double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw ParameterError("z outside [0, 1]");
  return 1.0 - std::sqrt((1.0 - z) * (1.0 + z));
}

} // namespace qsw
