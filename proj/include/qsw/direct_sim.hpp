#pragma once

// Monitored density-matrix evolution on a truncated lattice: each step applies
// the CPTP map and then erases every element with a bra or ket at the origin,
// booking the removed diagonal weight as detected (absorbed) probability.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsw/core_model.hpp"
#include "qsw/errors.hpp"

namespace qsw {

struct SimOptions {
  // Upper bound on the memory of the two density-matrix buffers.
  std::size_t memory_cap_bytes = std::size_t{1} << 31;
};

class MonitoredDensityState {
public:
  MonitoredDensityState() = default;

  static MonitoredDensityState initial(const Mat2& coin_density, int half_width,
                                       const SimOptions& opts = {}) {
    if (half_width < 1) throw ParameterError("lattice half-width must be >= 1");
    validate_density(coin_density);
    check_memory(half_width, opts);
    MonitoredDensityState s(half_width);
    for (int c = 0; c < 2; ++c)
      for (int cp = 0; cp < 2; ++cp) s.at(c, 0, cp, 0) = coin_density(c, cp);
    s.support_ = 0;
    s.parity_ = 0;
    return s;
  }

  int half_width() const noexcept { return half_width_; }
  int step_count() const noexcept { return step_count_; }
  double absorbed_mass() const noexcept { return absorbed_; }
  int support_radius() const noexcept { return support_; }
  Eigen::Index dimension() const noexcept { return dim_; }

  cplx at(int c, int x, int cp, int y) const { return data_[index(c, x) * dim_ + index(cp, y)]; }
  cplx& at(int c, int x, int cp, int y) { return data_[index(c, x) * dim_ + index(cp, y)]; }

  /// Survival probability: trace of the sub-normalized state.
  double trace() const {
    double t = 0.0;
    for (Eigen::Index i = 0; i < dim_; ++i) t += data_[i * dim_ + i].real();
    return t;
  }

  Eigen::MatrixXcd dense() const {
    Eigen::MatrixXcd m(dim_, dim_);
    for (Eigen::Index i = 0; i < dim_; ++i)
      for (Eigen::Index j = 0; j < dim_; ++j) m(i, j) = data_[i * dim_ + j];
    return m;
  }

  /// Rows/columns ordered by (position, coin): index (x + L) * 2 + c.
  Eigen::Index index(int c, int x) const noexcept {
    return static_cast<Eigen::Index>(x + half_width_) * 2 + c;
  }

  static void check_memory(int half_width, const SimOptions& opts) {
    const double dim = 2.0 * (2.0 * half_width + 1.0);
    const double bytes = 2.0 * dim * dim * sizeof(cplx);
    if (bytes > static_cast<double>(opts.memory_cap_bytes))
      throw ResourceError("density matrix for half-width " + std::to_string(half_width) +
                          " needs " + std::to_string(bytes / 1048576.0) +
                          " MiB, above the cap of " +
                          std::to_string(opts.memory_cap_bytes / 1048576.0) + " MiB");
  }

private:
  explicit MonitoredDensityState(int half_width)
      : half_width_(half_width), dim_(2 * (2 * half_width + 1)),
        data_(static_cast<std::size_t>(dim_ * dim_), cplx{0.0, 0.0}) {}

  static void validate_density(const Mat2& rho) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw ValidationError("coin density matrix is not Hermitian");
    if (std::abs(rho.trace() - cplx(1.0)) > 1e-12)
      throw ValidationError("coin density matrix does not have unit trace");
    Eigen::SelfAdjointEigenSolver<Mat2> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw ValidationError("coin density matrix is not positive semidefinite");
  }

  friend MonitoredDensityState step_monitored(const MonitoredDensityState&,
                                              const TranslationKrausFamily&);

  int half_width_ = 0;
  Eigen::Index dim_ = 0;
  std::vector<cplx> data_;
  int step_count_ = 0;
  double absorbed_ = 0.0;
  int support_ = 0;
  int parity_ = -1; // parity of occupied positions, -1 when mixed
};

namespace detail {

struct PairTerm {
  Mat2 left;        // C_a
  Mat2 right;       // C_b^dagger
  int left_shift;   // s_a
  int right_shift;  // s_b
};

inline std::vector<PairTerm> pair_terms(const TranslationKrausFamily& fam) {
  std::vector<PairTerm> out;
  for (const auto& e : fam.kraus)
    for (const auto& a : e.terms)
      for (const auto& b : e.terms) {
        if (a.coin.cwiseAbs().maxCoeff() == 0.0 || b.coin.cwiseAbs().maxCoeff() == 0.0) continue;
        out.push_back({a.coin, b.coin.adjoint(), a.shift, b.shift});
      }
  return out;
}

} // namespace detail

/// One monitored step rho -> Q(sum_j E_j rho E_j^dagger).
inline MonitoredDensityState step_monitored(const MonitoredDensityState& state,
                                            const TranslationKrausFamily& family) {
  const int L = state.half_width_;
  const int r = state.support_;
  if (r + 1 > L)
    throw TruncationError("walker support radius " + std::to_string(r + 1) +
                          " would exceed lattice half-width " + std::to_string(L));

  bool zero_shift = false;
  for (const auto& e : family.kraus)
    for (const auto& t : e.terms) {
      if (std::abs(t.shift) > 1) throw UnsupportedFamilyError("shifts beyond +-1 are not supported");
      zero_shift = zero_shift || t.shift == 0;
    }
  const auto pairs = detail::pair_terms(family);

  MonitoredDensityState next(L);
  const int parity = (state.parity_ < 0 || zero_shift) ? -1 : 1 - state.parity_;
  const int stride = parity < 0 ? 1 : 2;
  auto first = [&](int lo) {
    if (parity < 0) return lo;
    return ((lo % 2) + 2) % 2 == parity ? lo : lo + 1;
  };
  const int lo = first(-(r + 1));

  for (int x = lo; x <= r + 1; x += stride) {
    if (x == 0) continue;
    for (int y = lo; y <= r + 1; y += stride) {
      if (y == 0) continue;
      cplx b00{}, b01{}, b10{}, b11{};
      for (const auto& pt : pairs) {
        const int sx = x - pt.left_shift, sy = y - pt.right_shift;
        if (sx < -r || sx > r || sy < -r || sy > r) continue;
        const cplx r00 = state.at(0, sx, 0, sy), r01 = state.at(0, sx, 1, sy);
        const cplx r10 = state.at(1, sx, 0, sy), r11 = state.at(1, sx, 1, sy);
        // M = C_a * rho_block
        const cplx m00 = pt.left(0, 0) * r00 + pt.left(0, 1) * r10;
        const cplx m01 = pt.left(0, 0) * r01 + pt.left(0, 1) * r11;
        const cplx m10 = pt.left(1, 0) * r00 + pt.left(1, 1) * r10;
        const cplx m11 = pt.left(1, 0) * r01 + pt.left(1, 1) * r11;
        b00 += m00 * pt.right(0, 0) + m01 * pt.right(1, 0);
        b01 += m00 * pt.right(0, 1) + m01 * pt.right(1, 1);
        b10 += m10 * pt.right(0, 0) + m11 * pt.right(1, 0);
        b11 += m10 * pt.right(0, 1) + m11 * pt.right(1, 1);
      }
      next.at(0, x, 0, y) = b00;
      next.at(0, x, 1, y) = b01;
      next.at(1, x, 0, y) = b10;
      next.at(1, x, 1, y) = b11;
    }
  }

  // Weight landing on the origin is detected and removed. Only the diagonal
  // origin blocks carry probability; coherences with the origin are erased.
  double detected = 0.0;
  if (parity != 1) {
    for (const auto& pt : pairs) {
      const int sx = -pt.left_shift, sy = -pt.right_shift;
      if (sx < -r || sx > r || sy < -r || sy > r) continue;
      Mat2 blk;
      blk << state.at(0, sx, 0, sy), state.at(0, sx, 1, sy), state.at(1, sx, 0, sy),
          state.at(1, sx, 1, sy);
      detected += (pt.left * blk * pt.right).trace().real();
    }
  }

  next.step_count_ = state.step_count_ + 1;
  next.absorbed_ = state.absorbed_ + detected;
  next.support_ = r + 1;
  next.parity_ = parity;
  return next;
}

/// Applies only the CPTP part (no projection). Used to check trace
/// preservation; the result carries no absorption record.
inline Eigen::MatrixXcd apply_channel_dense(const Eigen::MatrixXcd& rho, int half_width,
                                            const TranslationKrausFamily& family) {
  const int n = 2 * half_width + 1;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
  for (const auto& e : family.kraus) {
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (const auto& t : e.terms)
      for (int x = -half_width; x <= half_width; ++x) {
        const int tx = x + t.shift;
        if (tx < -half_width || tx > half_width) continue;
        op.block<2, 2>((tx + half_width) * 2, (x + half_width) * 2) += t.coin;
      }
    out += op * rho * op.adjoint();
  }
  return out;
}

struct ReturnSeries {
  std::vector<double> survival;      // S_t, t = 0..t_max
  std::vector<double> return_prob;   // R_t = 1 - S_t
  std::vector<double> first_return;  // q_m = R_m - R_{m-1}, index 0 unused (0)

  int t_max() const noexcept { return static_cast<int>(survival.size()) - 1; }
};

inline ReturnSeries return_series(const TranslationKrausFamily& family, int t_max,
                                  const Mat2& coin_density, const SimOptions& opts = {}) {
  if (t_max < 1) throw ParameterError("t_max must be >= 1");
  auto state = MonitoredDensityState::initial(coin_density, t_max + 1, opts);
  ReturnSeries out;
  out.survival.reserve(t_max + 1);
  out.survival.push_back(state.trace());
  for (int t = 1; t <= t_max; ++t) {
    state = step_monitored(state, family);
    out.survival.push_back(state.trace());
  }
  out.return_prob.resize(out.survival.size());
  out.first_return.assign(out.survival.size(), 0.0);
  for (std::size_t t = 0; t < out.survival.size(); ++t) out.return_prob[t] = 1.0 - out.survival[t];
  for (std::size_t m = 1; m < out.survival.size(); ++m) {
    const double q = out.return_prob[m] - out.return_prob[m - 1];
    if (q < -1e-12)
      throw ConsistencyError("negative first-return probability " + std::to_string(q) +
                             " at step " + std::to_string(m));
    out.first_return[m] = q;
  }
  return out;
}

inline ReturnSeries return_series(const WalkParams& params, int t_max, const Mat2& coin_density,
                                  const SimOptions& opts = {}) {
  return return_series(kraus_family(params), t_max, coin_density, opts);
}

inline Mat2 coin_projector_R() {
  Mat2 m = Mat2::Zero();
  m(0, 0) = 1.0;
  return m;
}

/// sum_m q_m z^{m-1}: first detection after m map applications weighted the
/// same way the generating-function estimate weights it.
inline double weighted_return(const ReturnSeries& series, double z) {
  if (!(z > 0.0 && z < 1.0)) throw ParameterError("weighted_return needs 0 < z < 1");
  double acc = 0.0, w = 1.0;
  for (std::size_t m = 1; m < series.first_return.size(); ++m) {
    acc += series.first_return[m] * w;
    w *= z;
  }
  return acc;
}

} // namespace qsw
