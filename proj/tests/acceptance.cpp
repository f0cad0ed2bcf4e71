// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qsw/direct_sim.hpp"
#include "qsw/fit.hpp"
#include "qsw/genfun.hpp"
#include "qsw/oracles.hpp"
#include "qsw/perturbation.hpp"

using namespace qsw;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome unitary_oracle() {
  const WalkParams wp(pi / 4, 0.0);
  auto t0 = Clock::now();
  const double a = recurrence_estimate(wp, 0.9999);
  const double ta = seconds_since(t0);
  t0 = Clock::now();
  const double b = recurrence_estimate(wp, 0.99999);
  const double tb = seconds_since(t0);
  const double ref = 2 / pi;
  const bool ok = std::abs(a - ref) < 5e-3 && std::abs(b - ref) < 1e-3 && ta < 10 && tb < 10;
  return {ok, fmt("R(0.9999)=%.6f R(0.99999)=%.6f 2/pi=%.6f, %.2fs/%.2fs per point", a, b, ref, ta, tb)};
}

Outcome theta_two_fifths() {
  const double v = recurrence_estimate(WalkParams(2 * pi / 5, 0.0), 0.99999);
  return {std::abs(v - 0.9224) <= 2e-3, fmt("R=%.6f target 0.9224 +- 2e-3", v)};
}

std::vector<double> profile(double theta, const std::vector<double>& ps) {
  std::vector<double> out(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) out[i] = recurrence_estimate(WalkParams(theta, ps[i]), 0.99999);
  return out;
}

Outcome dip_existence() {
  std::vector<double> ps;
  for (int i = 0; i <= 15; ++i) ps.push_back(0.02 * i);
  const auto dip = profile(0.2892 * pi + 0.1, ps);
  std::size_t imin = 0;
  for (std::size_t i = 1; i < dip.size(); ++i)
    if (dip[i] < dip[imin]) imin = i;
  const double depth = dip[0] - dip[imin];
  const auto had = profile(pi / 4, ps);
  double worst = 0.0; // largest decrease between neighbours
  for (std::size_t i = 1; i < had.size(); ++i) worst = std::max(worst, had[i - 1] - had[i]);
  const bool ok = imin > 0 && depth >= 0.005 && worst <= 1e-4;
  return {ok, fmt("dip: argmin p=%.2f depth=%.5f; Hadamard max decrease=%.2e", ps[imin], depth, worst)};
}

Outcome crossover_angle() {
  // bisection on [0.25pi, 0.35pi] with tol 1e-8: 2 + ceil(log2(0.1pi/1e-8)) evaluations
  const double lo = 0.25 * pi, hi = 0.35 * pi, tol = 1e-8;
  const int evals = 2 + static_cast<int>(std::ceil(std::log2((hi - lo) / tol)));
  auto t0 = Clock::now();
  const double one = slope_balanced(CoinAngle(0.3 * pi), 100);
  const double t_eval = seconds_since(t0);
  (void)one;
  const double ts = theta_star(100, lo, hi, tol);
  const bool ok = ts >= 0.2885 * pi && ts <= 0.2895 * pi && evals <= 30 && t_eval < 5;
  return {ok, fmt("theta*=%.6f pi, %d evaluations of B_100 at %.3fs each", ts / pi, evals, t_eval)};
}

Outcome small_z_equivalence() {
  double worst = 0.0;
  const int t_max = 219; // 0.9^219 < 1e-10
  for (Model m : {Model::Balanced, Model::Correlated})
    for (double th : {pi / 4, 2 * pi / 5})
      for (double p : {0.2, 0.7}) {
        const WalkParams wp(th, p, m);
        const auto s = return_series(wp, t_max, coin_projector_R());
        for (double z : {0.5, 0.8, 0.9})
          worst = std::max(worst, std::abs(recurrence_estimate(wp, z) - weighted_return(s, z)));
      }
  return {worst < 5e-6, fmt("max |R~ - sum q z^(m-1)| = %.2e (tmax %d)", worst, t_max)};
}

Outcome pi_half_closed_form() {
  double worst = 0.0;
  for (double z : {0.9, 0.99, 0.999})
    for (double p : {0.1, 0.5, 0.9})
      worst = std::max(worst, std::abs(recurrence_estimate(WalkParams(pi / 2, p), z) - pi_half_recurrence(z, p)));
  return {worst < 1e-6, fmt("max deviation from closed form = %.2e", worst)};
}

Outcome correlated_step_function() {
  const WalkParams wp(2 * pi / 5, 0.5, Model::Correlated);
  std::vector<FitPoint> pts;
  bool sweep_ok = true;
  for (const auto& sp : z_sweep(wp)) {
    sweep_ok &= sp.ok();
    pts.push_back({sp.z, sp.value});
  }
  bool fit_ok = false;
  PowerLawFit fit;
  if (sweep_ok) {
    check_one_minus_b_applicable(wp);
    fit = fit_power_law(pts, FitForm::OneMinusB);
    fit_ok = std::isfinite(fit.c_fit) && fit.c_fit > 0 && fit.limit() == 1.0;
  }
  std::vector<double> r5, r10;
  for (double p : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto s = return_series(WalkParams(2 * pi / 5, p, Model::Correlated), 10, coin_projector_R());
    r5.push_back(s.return_prob[5]);
    r10.push_back(s.return_prob[10]);
  }
  double spread5 = 0.0;
  bool inc10 = true;
  for (std::size_t i = 1; i < r5.size(); ++i) {
    spread5 = std::max(spread5, std::abs(r5[i] - r5[0]));
    inc10 &= r10[i] > r10[i - 1];
  }
  const bool ok = fit_ok && spread5 <= 1e-12 && inc10;
  return {ok, fmt("1-b(1-z)^c: b=%.4f c=%.4f+-%.4f limit=%g; R5 spread=%.1e; R10 increasing=%s", fit.b_fit,
                  fit.c_fit, fit.c_err, fit.limit(), spread5, inc10 ? "yes" : "no")};
}

Outcome slope_regimes() {
  const auto bal = slope_series(CoinAngle(2 * pi / 5), Model::Balanced, 40);
  const double b30 = bal[29], b40 = bal[39];
  const bool sat = std::abs(b40 - b30) < 0.05 * std::abs(b40);

  const auto cor = slope_series(CoinAngle(2 * pi / 5), Model::Correlated, 100);
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  int n = 0;
  for (int t = 40; t <= 100; ++t, ++n) {
    const double y = cor[t - 1];
    st += t;
    sy += y;
    stt += double(t) * t;
    sty += t * y;
    syy += y * y;
  }
  const double cov = sty - st * sy / n, vt = stt - st * st / n, vy = syy - sy * sy / n;
  const double r2 = cov * cov / (vt * vy);

  const double bh = slope_balanced(CoinAngle(pi / 2), 40);
  const bool ok = sat && r2 > 0.999 && std::abs(bh + 1) <= 0.05;
  return {ok, fmt("balanced B30=%.4f B40=%.4f; correlated R^2=%.6f; B40(pi/2)=%.4f", b30, b40, r2, bh)};
}

Outcome fit_exponents() {
  auto c_of = [](double p) {
    std::vector<FitPoint> pts;
    for (const auto& sp : z_sweep(WalkParams(pi / 4, p))) pts.push_back({sp.z, sp.value});
    return fit_power_law(pts, FitForm::AMinusB);
  };
  const auto q = c_of(0.0), c = c_of(1.0);
  const bool ok = std::abs(q.c_fit - 1.0) <= 0.1 && std::abs(c.c_fit - 0.5) <= 0.1;
  return {ok, fmt("c(p=0)=%.4f+-%.4f, c(p=1)=%.4f+-%.4f (|b|=%.3f)", q.c_fit, q.c_err, c.c_fit, c.c_err,
                  std::abs(c.b_fit))};
}

Outcome n_max_stability() {
  double worst = 0.0;
  for (double th : {0.2 * pi, 0.3 * pi, 0.4 * pi})
    for (double p : {0.1, 0.5, 0.9}) {
      const WalkParams wp(th, p);
      worst = std::max(worst, std::abs(recurrence_estimate(wp, 0.999, 20) - recurrence_estimate(wp, 0.999, 30)));
    }
  return {worst < 2e-5, fmt("max |R~(20) - R~(30)| = %.2e", worst)};
}

Outcome property_suites() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* name) {
    if (!ok) failed.push_back(name);
  };
  const struct {
    double th, p;
    Model m;
  } cases[] = {{pi / 4, 0.3, Model::Balanced}, {2 * pi / 5, 0.7, Model::Balanced}, {pi / 3, 0.5, Model::Correlated}};

  auto pure = [](cplx r, cplx l) {
    Eigen::Vector2cd v(r, l);
    v.normalize();
    return Mat2(v * v.adjoint());
  };
  double coin_dev = 0.0, parity = 0.0, herm = 0.0, neg = 0.0, mass = 0.0, comp = 0.0;
  for (const auto& c : cases) {
    const WalkParams wp(c.th, c.p, c.m);
    const auto a = return_series(wp, 50, pure(1, 0));
    const auto b = return_series(wp, 50, pure(0, 1));
    const auto y = return_series(wp, 50, pure(1, cplx(0, 1)));
    for (int t = 0; t <= 50; ++t)
      coin_dev = std::max({coin_dev, std::abs(a.survival[t] - b.survival[t]), std::abs(a.survival[t] - y.survival[t])});
    for (int m = 1; m <= 50; m += 2) parity = std::max(parity, std::abs(a.first_return[m]));

    const auto fam = kraus_family(wp);
    for (int j = 0; j < 64; ++j)
      comp = std::max(comp, (fam.completeness(-pi + 2 * pi * j / 64) - Mat2::Identity()).cwiseAbs().maxCoeff());
    auto st = MonitoredDensityState::initial(pure(1, cplx(0, 1)), 9);
    for (int t = 0; t < 8; ++t) {
      st = step_monitored(st, fam);
      const Eigen::MatrixXcd d = st.dense();
      herm = std::max(herm, (d - d.adjoint()).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d, Eigen::EigenvaluesOnly);
      neg = std::max(neg, -es.eigenvalues().minCoeff());
      mass = std::max(mass, std::abs(st.trace() + st.absorbed_mass() - 1));
    }
  }
  check(coin_dev < 1e-10, "coin-state independence");
  check(parity < 1e-15, "parity");
  check(comp < 1e-13, "completeness");
  check(herm < 1e-13 && neg < 1e-13 && mass < 1e-13, "hermiticity/psd/trace");

  // gauge phases
  double gauge = 0.0;
  {
    const double th = 0.9, beta = 0.7;
    const Mat2 rho = pure(0.6, 0.8);
    const Mat2 rot = Eigen::Vector2cd(std::polar(1.0, beta), std::polar(1.0, -beta)).asDiagonal();
    const auto g = return_series(kraus_balanced(general_coin(th, 0.4, -1.3, beta), 0.4), 40, rho);
    const auto r = return_series(kraus_balanced(coin_matrix(CoinAngle(th)).cast<cplx>(), 0.4), 40,
                                 Mat2(rot * rho * rot.adjoint()));
    for (int t = 0; t <= 40; ++t) gauge = std::max(gauge, std::abs(g.survival[t] - r.survival[t]));
  }
  check(gauge < 1e-10, "gauge invariance");

  // closed-form determinant
  double det = 0.0;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0, 1), k(-pi, pi);
  for (int i = 0; i < 200; ++i) {
    const double th = u(rng) * pi / 2, p = u(rng), z = u(rng), k1 = k(rng), k2 = k(rng);
    const auto fam = kraus_family(WalkParams(th, p));
    const cplx brute = (Mat4::Identity() - z * momentum_kernel(fam, k1, k2)).determinant();
    det = std::max(det, std::abs(brute - determinant_balanced(DeterminantParams::make(z, p, k1 + k2, k1 - k2),
                                                              CoinAngle(th))));
  }
  check(det < 1e-12, "determinant");

  std::string which = failed.empty() ? "all" : "";
  for (const auto& f : failed) which += (which.empty() ? "" : ", ") + f;
  return {failed.empty(),
          fmt("%s; coin %.1e gauge %.1e completeness %.1e herm %.1e psd %.1e mass %.1e det %.1e", which.c_str(),
              coin_dev, gauge, comp, herm, neg, mass, det)};
}

} // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"unitary oracle match", unitary_oracle},
      {"theta = 2pi/5 unitary value", theta_two_fifths},
      {"dip existence", dip_existence},
      {"crossover angle", crossover_angle},
      {"small-z oracle equivalence", small_z_equivalence},
      {"theta = pi/2 closed form", pi_half_closed_form},
      {"correlated step-function evidence", correlated_step_function},
      {"slope regimes", slope_regimes},
      {"fit exponent regimes", fit_exponents},
      {"n_max stability", n_max_stability},
      {"property suites", property_suites},
  };
  int failures = 0, idx = 0;
  const auto start = Clock::now();
  for (const auto& [name, fn] : criteria) {
    ++idx;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %2d %-34s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", idx, name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed in %.1fs\n", idx - failures, idx, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
