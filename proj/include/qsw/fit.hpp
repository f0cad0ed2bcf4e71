#pragma once

// Power-law extrapolation of R~_z towards z -> 1 and location of minima of
// p -> R~_z(p).

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qsw/core_model.hpp"
#include "qsw/errors.hpp"
#include "qsw/genfun.hpp"
#include "qsw/parallel.hpp"

namespace qsw {

enum class FitForm {
  AMinusB,   // a - b (1 - z)^c
  OneMinusB, // 1 - b (1 - z)^c
};

inline const char* fit_form_name(FitForm f) { return f == FitForm::AMinusB ? "a-b" : "1-b"; }

struct FitPoint {
  double z;
  double value;
};

struct PowerLawFit {
  double a_fit = 1.0, b_fit = 0.0, c_fit = 0.0;
  // Asymptotic standard errors from the Jacobian at the optimum,
  // sigma^2 (J^T J)^{-1} with sigma^2 = RSS / (n - #params).
  double a_err = 0.0, b_err = 0.0, c_err = 0.0;
  FitForm model_form = FitForm::AMinusB;
  double residual_norm = 0.0;

  double limit() const noexcept { return model_form == FitForm::AMinusB ? a_fit : 1.0; }
  double predict(double z) const { return a_fit - b_fit * std::pow(1.0 - z, c_fit); }
};

namespace detail {

struct LinearPart {
  double a, b, rss;
};

// Best (a, b) for a fixed exponent; a is pinned to 1 for OneMinusB.
inline LinearPart solve_linear(std::span<const FitPoint> pts, FitForm form, double c) {
  const auto n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    const double x = std::pow(1.0 - p.z, c);
    sx += x;
    sy += p.value;
    sxx += x * x;
    sxy += x * p.value;
  }
  LinearPart out{};
  if (form == FitForm::OneMinusB) {
    // 1 - y = b x
    out.a = 1.0;
    out.b = (sx - sxy) / sxx;
  } else {
    const double det = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / det; // y = a + slope x
    out.a = (sy - slope * sx) / n;
    out.b = -slope;
  }
  out.rss = 0.0;
  for (const auto& p : pts) {
    const double r = p.value - (out.a - out.b * std::pow(1.0 - p.z, c));
    out.rss += r * r;
  }
  return out;
}

} // namespace detail

/// Least squares fit: coarse scan of c over [0.1, 2] with the model linear in
/// (a, b) at each c, golden-section refinement on c, then Gauss-Newton polish.
inline PowerLawFit fit_power_law(std::span<const FitPoint> points, FitForm form) {
  if (points.size() < 4) throw ParameterError("power-law fit needs at least 4 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].z < 1.0) || !std::isfinite(points[i].value))
      throw ParameterError("fit points need z < 1 and finite values");
    if (i && !(points[i].z > points[i - 1].z))
      throw ParameterError("fit points must be strictly increasing in z");
  }
  double lo_v = points[0].value, hi_v = points[0].value;
  for (const auto& p : points) {
    lo_v = std::min(lo_v, p.value);
    hi_v = std::max(hi_v, p.value);
  }
  if (hi_v - lo_v <= 1e-14 * std::max(1.0, std::abs(hi_v)))
    throw FitDegenerateError("fit data are constant", hi_v);

  constexpr double c_lo = 0.1, c_hi = 2.0, c_step = 0.01;
  double best_c = c_lo, best_rss = std::numeric_limits<double>::infinity();
  for (int i = 0; c_lo + i * c_step <= c_hi + 1e-12; ++i) {
    const double c = c_lo + i * c_step;
    const double rss = detail::solve_linear(points, form, c).rss;
    if (rss < best_rss) {
      best_rss = rss;
      best_c = c;
    }
  }

  // golden section on the bracketing grid cell(s)
  double lo = std::max(c_lo, best_c - c_step), hi = std::min(c_hi, best_c + c_step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = detail::solve_linear(points, form, x1).rss;
  double f2 = detail::solve_linear(points, form, x2).rss;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = detail::solve_linear(points, form, x1).rss;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = detail::solve_linear(points, form, x2).rss;
    }
  }
  double c = 0.5 * (lo + hi);
  auto lin = detail::solve_linear(points, form, c);
  double a = lin.a, b = lin.b, rss = lin.rss;

  const bool free_a = form == FitForm::AMinusB;
  const int k = free_a ? 3 : 2;
  const auto n = static_cast<Eigen::Index>(points.size());
  auto jacobian = [&](double bb, double cc) {
    Eigen::MatrixXd j(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lz = std::log(1.0 - points[i].z);
      const double x = std::pow(1.0 - points[i].z, cc);
      int col = 0;
      if (free_a) j(i, col++) = 1.0;
      j(i, col++) = -x;
      j(i, col) = -bb * x * lz;
    }
    return j;
  };
  auto residuals = [&](double aa, double bb, double cc) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i)
      r(i) = points[i].value - (aa - bb * std::pow(1.0 - points[i].z, cc));
    return r;
  };

  for (int it = 0; it < 20; ++it) {
    const Eigen::MatrixXd j = jacobian(b, c);
    const Eigen::VectorXd r = residuals(a, b, c);
    const Eigen::VectorXd step = j.colPivHouseholderQr().solve(r);
    if (!step.allFinite()) break;
    double na = a, nb, nc;
    int col = 0;
    if (free_a) na = a + step(col++);
    nb = b + step(col++);
    nc = c + step(col);
    if (!(nc > 0.0)) break;
    const double nrss = residuals(na, nb, nc).squaredNorm();
    if (!(nrss < rss)) break;
    a = na;
    b = nb;
    c = nc;
    rss = nrss;
  }

  PowerLawFit fit;
  fit.model_form = form;
  fit.a_fit = a;
  fit.b_fit = b;
  fit.c_fit = c;
  fit.residual_norm = std::sqrt(rss);
  const Eigen::MatrixXd j = jacobian(b, c);
  const double sigma2 = rss / static_cast<double>(n - k);
  const Eigen::MatrixXd cov = sigma2 * (j.transpose() * j).inverse();
  int col = 0;
  fit.a_err = free_a ? std::sqrt(std::max(0.0, cov(col, col))) : 0.0;
  if (free_a) ++col;
  fit.b_err = std::sqrt(std::max(0.0, cov(col, col)));
  ++col;
  fit.c_err = std::sqrt(std::max(0.0, cov(col, col)));
  return fit;
}

inline PowerLawFit fit_power_law(const std::vector<FitPoint>& points, FitForm form) {
  return fit_power_law(std::span<const FitPoint>(points), form);
}

/// A limit of exactly 1 cannot be fitted where the walk is known not to
/// approach 1 (theta = 0 or p = 0).
inline void check_one_minus_b_applicable(const WalkParams& params) {
  if (params.theta.radians() == 0.0 || params.p == 0.0)
    throw FitDegenerateError("1 - b(1-z)^c is ill-conditioned for theta = 0 or p = 0",
                             std::numeric_limits<double>::quiet_NaN());
}

struct MinimumEstimate {
  double p_min = 0.0;
  double r_min = 0.0;
  std::pair<double, double> interval_1e2{0.0, 0.0}; // R~ within 0.01 of the minimum
  std::pair<double, double> interval_1e3{0.0, 0.0}; // within 0.001
  bool monotone = false; // no interior minimum; intervals are left empty
};

/// Minimum of a unimodal profile on [0, 1] by bisection on the sign of the
/// slope, plus the crossing points of r_min + 0.01 and r_min + 0.001.
inline MinimumEstimate find_minimum(const std::function<double(double)>& profile, int iterations = 15) {
  if (iterations < 1) throw ParameterError("iterations must be >= 1");
  const double delta = std::ldexp(1.0, -(iterations + 2));
  auto pair_eval = [&](double x0, double x1) {
    double v[2];
    const double xs[2] = {x0, x1};
    parallel_for(2, [&](std::size_t i) { v[i] = profile(xs[i]); });
    return std::pair{v[0], v[1]};
  };

  MinimumEstimate est;
  const auto [f0, fh] = pair_eval(0.0, delta);
  if (fh >= f0) {
    est.monotone = true;
    est.p_min = 0.0;
    est.r_min = f0;
    return est;
  }

  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto [fl, fr] = pair_eval(std::max(0.0, mid - delta), std::min(1.0, mid + delta));
    if (fr > fl)
      hi = mid;
    else
      lo = mid;
  }
  est.p_min = 0.5 * (lo + hi);
  est.r_min = profile(est.p_min);
  const double f1 = profile(1.0);

  auto crossing = [&](double a, double b, double level, bool left) {
    // left: profile decreasing on [a, b]; right: increasing
    for (int it = 0; it < iterations; ++it) {
      const double mid = 0.5 * (a + b);
      const bool above = profile(mid) > level;
      if (above == left)
        a = mid;
      else
        b = mid;
    }
    return 0.5 * (a + b);
  };
  const double offsets[2] = {1e-2, 1e-3};
  std::pair<double, double>* targets[2] = {&est.interval_1e2, &est.interval_1e3};
  double ends[4];
  parallel_for(4, [&](std::size_t i) {
    const double level = est.r_min + offsets[i / 2];
    const bool left = i % 2 == 0;
    if (left)
      ends[i] = f0 <= level ? 0.0 : crossing(0.0, est.p_min, level, true);
    else
      ends[i] = f1 <= level ? 1.0 : crossing(est.p_min, 1.0, level, false);
  });
  for (int k = 0; k < 2; ++k) *targets[k] = {std::min(ends[2 * k], est.p_min), std::max(ends[2 * k + 1], est.p_min)};
  return est;
}

inline MinimumEstimate find_minimum(CoinAngle theta, double z, int n_max = 20, int iterations = 15,
                                    Model model = Model::Balanced, int grid_n = 1024) {
  return find_minimum(
      [&](double p) { return recurrence_estimate(WalkParams(theta, p, model), z, n_max, grid_n); },
      iterations);
}

} // namespace qsw
