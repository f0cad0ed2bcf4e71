#pragma once

// First-order expansion of the monitored return probability around the
// unitary walk: R_t(p) = R_t(0) + p B_t + O(p^2). Everything is evaluated with
// projected pure states; no density matrices are formed.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsw/core_model.hpp"
#include "qsw/errors.hpp"

namespace qsw {

/// State vector over (position, coin) on [-L, L], index (x + L) * 2 + c.
class LatticeVector {
public:
  explicit LatticeVector(int half_width)
      : half_width_(half_width), amp_(2 * (2 * half_width + 1), cplx{}) {}

  int half_width() const noexcept { return half_width_; }
  cplx& operator()(int c, int x) { return amp_[(x + half_width_) * 2 + c]; }
  cplx operator()(int c, int x) const { return amp_[(x + half_width_) * 2 + c]; }

  double norm2() const {
    double n = 0.0;
    for (const auto& a : amp_) n += std::norm(a);
    return n;
  }

  /// pi_0' op |this>, with op = sum_terms coin (x) T^shift.
  LatticeVector apply_projected(const TranslationKraus& op) const {
    LatticeVector out(half_width_);
    for (int x = -half_width_; x <= half_width_; ++x) {
      const cplx a0 = (*this)(0, x), a1 = (*this)(1, x);
      if (a0 == cplx{} && a1 == cplx{}) continue;
      for (const auto& t : op.terms) {
        const int tx = x + t.shift;
        if (tx == 0) continue;
        if (tx < -half_width_ || tx > half_width_)
          throw TruncationError("pure-state support left the lattice");
        out(0, tx) += t.coin(0, 0) * a0 + t.coin(0, 1) * a1;
        out(1, tx) += t.coin(1, 0) * a0 + t.coin(1, 1) * a1;
      }
    }
    return out;
  }

private:
  int half_width_;
  std::vector<cplx> amp_;
};

inline TranslationKraus unitary_step(CoinAngle theta) {
  return detail::shifted_coin(coin_matrix(theta).cast<cplx>(), 1.0);
}

struct MonitoredTrajectory {
  CoinAngle theta;
  std::vector<LatticeVector> states; // v_k = (pi_0' U)^k psi_0, k = 0..t_max
};

inline MonitoredTrajectory monitored_trajectory(CoinAngle theta, int t_max,
                                                const Eigen::Vector2cd& coin_state) {
  if (t_max < 1) throw ParameterError("t_max must be >= 1");
  if (std::abs(coin_state.squaredNorm() - 1.0) > 1e-12)
    throw ValidationError("coin state is not normalized");
  MonitoredTrajectory traj{theta, {}};
  traj.states.reserve(t_max + 1);
  LatticeVector v(t_max + 1);
  v(0, 0) = coin_state(0);
  v(1, 0) = coin_state(1);
  traj.states.push_back(v);
  const auto step = unitary_step(theta);
  for (int k = 1; k <= t_max; ++k) traj.states.push_back(traj.states.back().apply_projected(step));
  return traj;
}

/// B_1..B_{t_max} (index t-1). For each insertion step k one classical branch
/// per Kraus operator is spawned from v_k and propagated to t_max, so the whole
/// series costs the same as its last element.
inline std::vector<double> slope_series(CoinAngle theta, Model model, int t_max) {
  const auto traj = monitored_trajectory(theta, t_max, Eigen::Vector2cd(1.0, 0.0));
  const auto step = unitary_step(theta);
  const auto branches = classical_branches(theta, model);

  std::vector<double> branch_sum(t_max + 1, 0.0);
  for (int k = 0; k < t_max; ++k)
    for (const auto& op : branches) {
      LatticeVector w = traj.states[k].apply_projected(op);
      branch_sum[k + 1] += w.norm2();
      for (int t = k + 2; t <= t_max; ++t) {
        w = w.apply_projected(step);
        branch_sum[t] += w.norm2();
      }
    }

  std::vector<double> out(t_max);
  for (int t = 1; t <= t_max; ++t)
    out[t - 1] = t * traj.states[t].norm2() - branch_sum[t];
  return out;
}

inline double slope_balanced(CoinAngle theta, int t) {
  return slope_series(theta, Model::Balanced, t).back();
}

inline double slope_correlated(CoinAngle theta, int t) {
  return slope_series(theta, Model::Correlated, t).back();
}

/// Root of theta -> B_t(theta) by bisection.
inline double theta_star(int t, double bracket_lo, double bracket_hi, double tol = 1e-10) {
  auto f = [t](double th) { return slope_balanced(CoinAngle(th), t); };
  double lo = bracket_lo, hi = bracket_hi;
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw BracketError("B_" + std::to_string(t) + " does not change sign on [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// lim_t B_t need not equal R'(0) when the derivatives converge non-uniformly;
// this is known to happen at theta = pi/2.
inline bool slope_limit_unreliable(CoinAngle theta) { return theta.radians() > 0.45 * pi; }

} // namespace qsw
