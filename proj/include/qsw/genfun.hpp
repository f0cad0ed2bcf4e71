#pragma once

// Recurrence estimate through the first-return generating function.
//
// The Stieltjes function s(z) = (I-Q)(I - zT)^{-1}(I-Q) is built from
// Fourier coefficients of the momentum resolvent A(z,k1,k2) = [I - zV]^{-1},
// restricted to the even cross subspace (density-matrix elements with the ket
// or the bra at the origin, |x|,|m| <= n_max). The renewal relation
// f(z) = (I - s(z)^{-1}) / z then gives
//
//     R~_z = sum_m q_m z^{m-1},  q_m = probability of first detection at step m,
//
// as (1 - w_RR00 - w_LL00) / z with s(z) w = e_RR00.
//
// Quadrature: in (xi, eta) = (k1 + k2, k1 - k2) the integrand is 2pi-periodic
// in each variable and its near-singular crests lie on xi, eta in pi Z. Both
// axes use xi = s - sin(2s)/2 with the midpoint rule in s, so no node lands on
// a crest and the Jacobian 1 - cos(2s) flattens the peaks.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsw/core_model.hpp"
#include "qsw/errors.hpp"
#include "qsw/linalg.hpp"
#include "qsw/parallel.hpp"

namespace qsw {

inline constexpr double max_validated_z = 0.99999;

struct DeterminantParams {
  double xi;        // k1 + k2
  double eta;       // k1 - k2
  double rho_var;   // 1 - z p cos(xi)
  double sigma_var; // z (1 - p)

  static DeterminantParams make(double z, double p, double xi, double eta) {
    return {xi, eta, 1.0 - z * p * std::cos(xi), z * (1.0 - p)};
  }
};

/// det(I - zV) for the balanced family, in closed form.
inline double determinant_balanced(const DeterminantParams& dp, CoinAngle theta) {
  const double r = dp.rho_var, s = dp.sigma_var;
  const double cx = std::cos(dp.xi), ce = std::cos(dp.eta);
  const double cos_t = std::cos(theta.radians());
  const double diff = (r - s) * (r + s);
  return diff * diff +
         (2.0 * r * s * (1.0 - cx * ce) - (r * r + s * s) * (cx - ce)) * 2.0 * r * s * cos_t * cos_t;
}

/// V(k1,k2) grouped by shift pair: V = sum_{s1,s2} C_{s1 s2} e^{-i(s1 k1 + s2 k2)}.
class LaurentKernel {
public:
  explicit LaurentKernel(const TranslationKrausFamily& family) {
    if (!family.real_blocks())
      throw UnsupportedFamilyError("resolvent needs real coin blocks; family '" + family.label +
                                   "' is complex");
    for (auto& c : coef_) c.setZero();
    for (const auto& e : family.kraus)
      for (const auto& a : e.terms)
        for (const auto& b : e.terms) {
          if (std::abs(a.shift) > 1 || std::abs(b.shift) > 1)
            throw UnsupportedFamilyError("shifts beyond +-1 are not supported");
          Mat4& dst = coef_[slot(a.shift, b.shift)];
          for (int c = 0; c < 2; ++c)
            for (int cp = 0; cp < 2; ++cp)
              for (int d = 0; d < 2; ++d)
                for (int dp = 0; dp < 2; ++dp)
                  dst(2 * c + cp, 2 * d + dp) += a.coin(c, d) * b.coin(cp, dp);
        }
  }

  Mat4 operator()(double k1, double k2) const {
    Mat4 v = Mat4::Zero();
    for (int s1 = -1; s1 <= 1; ++s1)
      for (int s2 = -1; s2 <= 1; ++s2) {
        const Mat4& c = coef_[slot(s1, s2)];
        if (c.isZero(0.0)) continue;
        v += c * std::polar(1.0, -(s1 * k1 + s2 * k2));
      }
    return v;
  }

private:
  static int slot(int s1, int s2) { return (s1 + 1) * 3 + (s2 + 1); }
  std::array<Mat4, 9> coef_;
};

/// Inverse of a 4x4 matrix by Gauss-Jordan elimination with row pivoting.
inline Mat4 invert4_pivoted(Mat4 m) {
  Mat4 inv = Mat4::Identity();
  for (int k = 0; k < 4; ++k) {
    int piv = k;
    double best = std::abs(m(k, k));
    for (int i = k + 1; i < 4; ++i)
      if (std::abs(m(i, k)) > best) {
        best = std::abs(m(i, k));
        piv = i;
      }
    if (best < 1e-300) throw SingularKernelError("resolvent kernel is singular");
    if (piv != k) {
      m.row(k).swap(m.row(piv));
      inv.row(k).swap(inv.row(piv));
    }
    const cplx d = cplx(1.0) / m(k, k);
    m.row(k) *= d;
    inv.row(k) *= d;
    for (int i = 0; i < 4; ++i) {
      if (i == k) continue;
      const cplx f = m(i, k);
      if (f == cplx(0.0)) continue;
      m.row(i) -= f * m.row(k);
      inv.row(i) -= f * inv.row(k);
    }
  }
  return inv;
}

namespace detail {

inline bool balanced_source(const TranslationKrausFamily& f) {
  return f.source && f.source->model == Model::Balanced;
}

inline double checked_inverse(double d) {
  if (std::abs(d) < 1e-300)
    throw SingularKernelError("|det(I - zV)| below 1e-300; z too close to 1 on a crest");
  return 1.0 / d;
}

} // namespace detail

/// A(z,k1,k2) by pivoted 4x4 inversion, for any real family.
inline Mat4 resolvent_kernel_direct(const TranslationKrausFamily& family, double z, double k1,
                                    double k2) {
  const LaurentKernel v(family);
  return invert4_pivoted(Mat4::Identity() - z * v(k1, k2));
}

/// A(z,k1,k2). Balanced families use adj(I - zV) / D with the closed-form
/// determinant; other families are inverted directly.
inline Mat4 resolvent_kernel(const TranslationKrausFamily& family, double z, double k1, double k2) {
  if (!detail::balanced_source(family)) return resolvent_kernel_direct(family, z, k1, k2);
  const LaurentKernel v(family);
  const Mat4 m = Mat4::Identity() - z * v(k1, k2);
  const auto& src = *family.source;
  const double d = determinant_balanced(DeterminantParams::make(z, src.p, k1 + k2, k1 - k2), src.theta);
  return adjugate4(m) * detail::checked_inverse(d);
}

struct SineSubstitutionRule {
  std::vector<double> nodes;   // xi_j = s_j - sin(2 s_j)/2
  std::vector<double> weights; // (2pi/n)(1 - cos 2 s_j) / (2pi)
};

inline SineSubstitutionRule sine_substitution_rule(int n) {
  if (n <= 0 || n % 4 != 0)
    throw ParameterError("quadrature grid must be a positive multiple of 4, got " + std::to_string(n));
  SineSubstitutionRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double h = 2.0 * pi / n;
  for (int j = 0; j < n; ++j) {
    const double s = (j + 0.5) * h;
    r.nodes[j] = s - 0.5 * std::sin(2.0 * s);
    r.weights[j] = (1.0 - std::cos(2.0 * s)) / n;
  }
  return r;
}

// Near p = 1 the determinant approaches (1 - z cos xi)^4 and the transform of
// 1/D cancels against the adjugate to within ~1e-2 at z = 0.99999.
inline constexpr double adjugate_p_limit = 0.95;

enum class FourierRoute {
  Auto,     // adjugate convolution for balanced families with p <= adjugate_p_limit, direct otherwise
  Direct,   // transform every 4x4 kernel sample
  Adjugate, // transform 1/D once, convolve with adjugate Laurent coefficients
};

/// Fourier coefficients A_{xm,yn}(z), keyed by (x - y, m - n).
class FourierBlocks {
public:
  FourierBlocks(double z, int n_max, int grid_n)
      : z_(z), n_max_(n_max), grid_n_(grid_n), side_(2 * n_max + 1),
        blocks_(static_cast<std::size_t>(side_ * side_), Mat4::Zero()) {}

  double z() const noexcept { return z_; }
  int n_max() const noexcept { return n_max_; }
  int grid_n() const noexcept { return grid_n_; }

  /// Blocks with an odd index sum vanish by bipartiteness and are never stored.
  const Mat4& at(int d1, int d2) const {
    static const Mat4 zero = Mat4::Zero();
    if ((d1 + d2) % 2 != 0 || d1 % 2 != 0) return zero;
    check_range(d1, d2);
    return blocks_[slot(d1, d2)];
  }
  Mat4& mutable_at(int d1, int d2) {
    check_range(d1, d2);
    return blocks_[slot(d1, d2)];
  }

private:
  void check_range(int d1, int d2) const {
    if (std::abs(d1) > 2 * n_max_ || std::abs(d2) > 2 * n_max_)
      throw ParameterError("Fourier block offset outside +-2 n_max");
  }
  std::size_t slot(int d1, int d2) const {
    return static_cast<std::size_t>((d1 / 2 + n_max_) * side_ + (d2 / 2 + n_max_));
  }

  double z_;
  int n_max_, grid_n_, side_;
  std::vector<Mat4> blocks_;
};

namespace detail {

// rows: frequency f in [-span, span]; columns: nodes. Optional per-node weights.
inline Eigen::MatrixXcd phase_table(int span, const std::vector<double>& nodes, std::size_t count,
                                    const std::vector<double>* weights = nullptr) {
  Eigen::MatrixXcd t(2 * span + 1, static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    const double w = weights ? (*weights)[j] : 1.0;
    for (int f = -span; f <= span; ++f) t(f + span, j) = std::polar(w, f * nodes[j]);
  }
  return t;
}

// Rows j with s_j < pi pair with n-1-j (xi -> 2pi - xi); for real families
// the kernel obeys A(-k) = conj(A(k)), so the full sum is twice the real part
// of the half sum.
inline int half_rows(int n) { return n / 2; }

inline void fourier_direct(const TranslationKrausFamily& family, FourierBlocks& out) {
  const int n = out.grid_n(), span = 2 * out.n_max(), nf = 2 * span + 1;
  const double z = out.z();
  const LaurentKernel v(family);
  const auto rule = sine_substitution_rule(n);
  const int rows = half_rows(n);

  const Eigen::MatrixXcd pb = phase_table(span, rule.nodes, n);
  const Eigen::MatrixXcd pa = phase_table(span, rule.nodes, rows, &rule.weights);
  Eigen::MatrixXcd g(rows, nf * 16);

  constexpr int chunk = 32;
  Eigen::MatrixXcd samples(n, 16 * chunk);
  for (int j0 = 0; j0 < rows; j0 += chunk) {
    const int nrow = std::min(chunk, rows - j0);
    parallel_for(static_cast<std::size_t>(nrow), [&](std::size_t r) {
      const double xi = rule.nodes[j0 + r];
      for (int l = 0; l < n; ++l) {
        const double eta = rule.nodes[l];
        const Mat4 a = invert4_pivoted(Mat4::Identity() - z * v(0.5 * (xi + eta), 0.5 * (xi - eta)));
        for (int e = 0; e < 16; ++e) samples(l, 16 * r + e) = rule.weights[l] * a(e / 4, e % 4);
      }
    });
    const Eigen::MatrixXcd gc = pb * samples.leftCols(16 * nrow);
    for (int r = 0; r < nrow; ++r)
      for (int bi = 0; bi < nf; ++bi)
        for (int e = 0; e < 16; ++e) g(j0 + r, bi * 16 + e) = gc(bi, 16 * r + e);
  }
  const Eigen::MatrixXcd total = pa * g;

  for (int d1 = -span; d1 <= span; d1 += 2)
    for (int d2 = -span; d2 <= span; d2 += 2) {
      const int a = (d1 + d2) / 2, b = (d1 - d2) / 2;
      Mat4& blk = out.mutable_at(d1, d2);
      for (int e = 0; e < 16; ++e) blk(e / 4, e % 4) = 2.0 * total(a + span, (b + span) * 16 + e).real();
    }
}

inline void fourier_adjugate(const TranslationKrausFamily& family, FourierBlocks& out) {
  constexpr int deg = 3; // adj entries are cubic in e^{+-ik1}, e^{+-ik2}
  const int n = out.grid_n(), span = 2 * out.n_max(), ext = span + deg;
  const double z = out.z();
  const LaurentKernel v(family);
  const auto rule = sine_substitution_rule(n);
  const int rows = half_rows(n);

  auto det_at = [&](double k1, double k2) -> cplx {
    if (balanced_source(family)) {
      const auto& src = *family.source;
      return determinant_balanced(DeterminantParams::make(z, src.p, k1 + k2, k1 - k2), src.theta);
    }
    PivotedLU<cplx> lu(Mat4::Identity() - z * v(k1, k2));
    return lu.determinant();
  };

  // Laurent coefficients of adj(I - zV) from an exact 8x8 DFT.
  constexpr int grid = 8;
  std::array<Mat4, (2 * deg + 1) * (2 * deg + 1)> adj_coef;
  for (auto& c : adj_coef) c.setZero();
  for (int j = 0; j < grid; ++j)
    for (int l = 0; l < grid; ++l) {
      const double k1 = 2.0 * pi * j / grid, k2 = 2.0 * pi * l / grid;
      const Mat4 adj = adjugate4(Mat4::Identity() - z * v(k1, k2));
      for (int al = -deg; al <= deg; ++al)
        for (int be = -deg; be <= deg; ++be)
          adj_coef[(al + deg) * (2 * deg + 1) + be + deg] +=
              adj * std::polar(1.0 / (grid * grid), -(al * k1 + be * k2));
    }

  // Fourier transform of 1/D on the (xi, eta) grid.
  Eigen::MatrixXcd inv_d(rows, n);
  parallel_for(static_cast<std::size_t>(rows), [&](std::size_t j) {
    const double xi = rule.nodes[j];
    for (int l = 0; l < n; ++l) {
      const double eta = rule.nodes[l];
      const cplx d = det_at(0.5 * (xi + eta), 0.5 * (xi - eta));
      if (std::abs(d) < 1e-300)
        throw SingularKernelError("|det(I - zV)| below 1e-300; z too close to 1 on a crest");
      inv_d(j, l) = rule.weights[l] / d;
    }
  });
  const Eigen::MatrixXcd pb = phase_table(ext, rule.nodes, n);
  const Eigen::MatrixXcd pa = phase_table(ext, rule.nodes, rows, &rule.weights);
  const Eigen::MatrixXcd g = inv_d * pb.transpose();
  const Eigen::MatrixXcd total = pa * g; // (a, b) in [-ext, ext]^2
  auto inv_d_hat = [&](int d1, int d2) { return 2.0 * total((d1 + d2) / 2 + ext, (d1 - d2) / 2 + ext).real(); };

  for (int d1 = -span; d1 <= span; d1 += 2)
    for (int d2 = -span; d2 <= span; d2 += 2) {
      Mat4 acc = Mat4::Zero();
      for (int al = -deg; al <= deg; ++al)
        for (int be = -deg; be <= deg; ++be) {
          if ((al + be) % 2 != 0) continue;
          acc += adj_coef[(al + deg) * (2 * deg + 1) + be + deg] * inv_d_hat(d1 + al, d2 + be);
        }
      out.mutable_at(d1, d2) = acc.real().cast<cplx>();
    }
}

} // namespace detail

inline FourierBlocks fourier_blocks(const TranslationKrausFamily& family, double z, int n_max,
                                    int grid_n = 1024, FourierRoute route = FourierRoute::Auto) {
  if (n_max < 1) throw ParameterError("n_max must be >= 1");
  if (!(z >= 0.0 && z < 1.0)) throw ParameterError("z outside [0, 1)");
  sine_substitution_rule(grid_n); // validates grid_n
  if (!family.real_blocks())
    throw UnsupportedFamilyError("Fourier blocks need real coin blocks");
  FourierBlocks out(z, n_max, grid_n);
  if (route == FourierRoute::Auto)
    route = detail::balanced_source(family) && family.source->p <= adjugate_p_limit ? FourierRoute::Adjugate
                                                                                     : FourierRoute::Direct;
  if (route == FourierRoute::Direct)
    detail::fourier_direct(family, out);
  else
    detail::fourier_adjugate(family, out);
  return out;
}

/// Basis element |c, c', x, m> of the cross subspace (x = 0 or m = 0).
struct CrossIndex {
  int c, cp, x, m;
  bool operator==(const CrossIndex&) const = default;
};

/// Even positions on the cross with |x|, |m| <= n_max: the x-arm (m = 0)
/// first, then the m-arm without the origin; coin pairs vary fastest.
inline std::vector<CrossIndex> cross_basis(int n_max) {
  std::vector<CrossIndex> out;
  auto push = [&](int x, int m) {
    for (int c = 0; c < 2; ++c)
      for (int cp = 0; cp < 2; ++cp) out.push_back({c, cp, x, m});
  };
  for (int x = -n_max; x <= n_max; x += 2) push(x, 0);
  for (int m = -n_max; m <= n_max; m += 2)
    if (m != 0) push(0, m);
  return out;
}

struct StieltjesMatrix {
  double z = 0.0;
  int n_max = 0;
  std::vector<CrossIndex> basis;
  Eigen::MatrixXcd entries;

  Eigen::Index find(const CrossIndex& e) const {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == e) return static_cast<Eigen::Index>(i);
    throw ParameterError("basis element not on the cross");
  }
};

inline StieltjesMatrix stieltjes_matrix(const FourierBlocks& blocks) {
  if (blocks.n_max() < 2 || blocks.n_max() % 2 != 0)
    throw ParameterError("n_max must be even and >= 2");
  StieltjesMatrix s;
  s.z = blocks.z();
  s.n_max = blocks.n_max();
  s.basis = cross_basis(s.n_max);
  const auto n = static_cast<Eigen::Index>(s.basis.size());
  s.entries.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& bi = s.basis[i];
      const auto& bj = s.basis[j];
      s.entries(i, j) = blocks.at(bi.x - bj.x, bi.m - bj.m)(2 * bi.c + bi.cp, 2 * bj.c + bj.cp);
    }
  return s;
}

inline StieltjesMatrix stieltjes_matrix(const TranslationKrausFamily& family, double z, int n_max,
                                        int grid_n = 1024, FourierRoute route = FourierRoute::Auto) {
  if (n_max < 2 || n_max % 2 != 0) throw ParameterError("n_max must be even and >= 2");
  return stieltjes_matrix(fourier_blocks(family, z, n_max, grid_n, route));
}

struct RecurrenceOptions {
  int grid_n = 1024;
  // Solve on the swap-symmetric subspace (one arm of the cross) instead of
  // the full cross. Exact for real families.
  bool symmetric_reduction = false;
  FourierRoute route = FourierRoute::Auto;
  double max_condition = 1e14;
};

struct RecurrenceResult {
  double value = 0.0;
  double condition = 0.0;
  Eigen::Index dimension = 0;
};

inline void validate_z(double z) {
  if (!(z > 0.0 && z < 1.0)) throw ParameterError("z must lie in (0, 1)");
  if (z > max_validated_z + 1e-12)
    throw OutOfValidatedRangeError("z = " + std::to_string(z) + " exceeds the validated limit " +
                                   std::to_string(max_validated_z));
}

/// Renewal step: solve s w = e_RR00 with largest-pivot elimination and return
/// (1 - w_RR00 - w_LL00) / z.
inline RecurrenceResult solve_renewal(const StieltjesMatrix& s, const RecurrenceOptions& opts = {}) {
  const Eigen::Index rr = s.find({0, 0, 0, 0});
  const Eigen::Index ll = s.find({1, 1, 0, 0});

  Eigen::MatrixXcd a;
  if (opts.symmetric_reduction) {
    // Unknowns on the x-arm only: w(c,c',0,m) = w(c',c,m,0).
    std::vector<Eigen::Index> arm;
    for (std::size_t i = 0; i < s.basis.size(); ++i)
      if (s.basis[i].m == 0) arm.push_back(static_cast<Eigen::Index>(i));
    const auto k = static_cast<Eigen::Index>(arm.size());
    a.resize(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index c = 0; c < k; ++c) {
        const auto& e = s.basis[arm[c]];
        cplx v = s.entries(arm[r], arm[c]);
        if (e.x != 0) v += s.entries(arm[r], s.find({e.cp, e.c, 0, e.x}));
        a(r, c) = v;
      }
  } else {
    a = s.entries;
  }
  // The x-arm is a prefix of the full basis, so rr and ll index both systems.
  const PivotedLU<cplx> lu(a);
  RecurrenceResult res;
  res.dimension = a.rows();
  res.condition = lu.condition1();
  if (lu.singular() || !(res.condition <= opts.max_condition))
    throw ConditioningError("Stieltjes matrix ill-conditioned: cond_1 = " +
                                std::to_string(res.condition) + " (z = " + std::to_string(s.z) +
                                ", n_max = " + std::to_string(s.n_max) +
                                ", dim = " + std::to_string(a.rows()) + ")",
                            res.condition);
  const Eigen::VectorXcd w = lu.solve(Eigen::VectorXcd::Unit(a.rows(), rr));
  res.value = (1.0 - (w(rr) + w(ll)).real()) / s.z;
  return res;
}

inline RecurrenceResult recurrence_estimate_detailed(const TranslationKrausFamily& family, double z,
                                                     int n_max = 20,
                                                     const RecurrenceOptions& opts = {}) {
  validate_z(z);
  return solve_renewal(stieltjes_matrix(family, z, n_max, opts.grid_n, opts.route), opts);
}

inline double recurrence_estimate(const WalkParams& params, double z, int n_max = 20,
                                  int grid_n = 1024) {
  RecurrenceOptions opts;
  opts.grid_n = grid_n;
  return recurrence_estimate_detailed(kraus_family(params), z, n_max, opts).value;
}

inline std::vector<double> default_z_samples() {
  return {0.99, 0.995, 0.998, 0.999, 0.9995, 0.9998, 0.9999, 0.99995, 0.99998, 0.99999};
}

struct SweepPoint {
  double z = 0.0;
  double value = 0.0;
  std::string error; // empty on success
  bool ok() const noexcept { return error.empty(); }
};

/// One independent estimate per z; failures are recorded and the sweep goes on.
inline std::vector<SweepPoint> z_sweep(const WalkParams& params,
                                       const std::vector<double>& z_list = default_z_samples(),
                                       int n_max = 20, const RecurrenceOptions& opts = {}) {
  std::vector<SweepPoint> out(z_list.size());
  const auto family = kraus_family(params);
  parallel_for(z_list.size(), [&](std::size_t i) {
    out[i].z = z_list[i];
    try {
      out[i].value = recurrence_estimate_detailed(family, z_list[i], n_max, opts).value;
    } catch (const Error& e) {
      out[i].value = std::numeric_limits<double>::quiet_NaN();
      out[i].error = e.what();
    }
  });
  return out;
}

} // namespace qsw
