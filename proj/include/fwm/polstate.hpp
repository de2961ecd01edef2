#pragma once

// Jones-vector and two-photon polarization algebra.
//
// Single-photon vectors are stored in the linear {H, V} basis. Two-photon
// amplitudes are ordered (signal ⊗ idler):
//   circular: (LL, LR, RL, RR)      linear: (HH, HV, VH, VV)
// with L = (H + iV)/√2 and R = (H - iV)/√2.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "fwm/angmom.hpp"
#include "fwm/error.hpp"

namespace fwm {

enum class Basis { circular, linear };

std::string_view to_string(Basis basis) noexcept;
/// Accepts "circular" or "linear"; throws DomainError otherwise.
Basis parse_basis(std::string_view name);

template <typename Scalar>
using Jones = Eigen::Matrix<std::complex<Scalar>, 2, 1>;
template <typename Scalar>
using Amplitudes4 = Eigen::Matrix<std::complex<Scalar>, 4, 1>;
template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Matrix4c = Eigen::Matrix<std::complex<Scalar>, 4, 4>;

/// Columns are |L> and |R> written in {H, V}.
template <typename Scalar>
Matrix2c<Scalar> circular_to_linear() {
  using C = std::complex<Scalar>;
  const Scalar s = Scalar(1) / std::sqrt(Scalar(2));
  Matrix2c<Scalar> u;
  u << C(s, 0), C(s, 0), C(0, s), C(0, -s);
  return u;
}

/// Two-photon basis change taking `from` coordinates to `to` coordinates.
template <typename Scalar>
Matrix4c<Scalar> basis_change(Basis from, Basis to) {
  if (from == to) return Matrix4c<Scalar>::Identity();
  Matrix2c<Scalar> u = circular_to_linear<Scalar>();
  if (from == Basis::linear) u = u.adjoint().eval();
  return Eigen::kroneckerProduct(u, u);
}

/// Single-photon polarization analyzer setting.
template <typename Scalar>
class BasicProjector {
 public:
  static constexpr Scalar kNormTolerance = Scalar(1e-12);

  /// Throws DomainError unless |c_h|² + |c_v|² = 1 within 1e-12.
  BasicProjector(std::complex<Scalar> c_h, std::complex<Scalar> c_v) : jones_(c_h, c_v) {
    if (std::abs(jones_.squaredNorm() - Scalar(1)) > kNormTolerance) {
      throw DomainError("projector is not normalized");
    }
  }

  /// Rescales to unit norm; throws DomainError for the zero vector.
  static BasicProjector normalized(std::complex<Scalar> c_h, std::complex<Scalar> c_v) {
    const Scalar n = std::sqrt(std::norm(c_h) + std::norm(c_v));
    if (!(n > 0)) throw DomainError("projector has zero norm");
    return BasicProjector(c_h / n, c_v / n);
  }

  static BasicProjector from_jones(const Jones<Scalar>& v) { return normalized(v(0), v(1)); }

  static BasicProjector H() { return {1, 0}; }
  static BasicProjector V() { return {0, 1}; }
  static BasicProjector D() { return normalized(1, 1); }
  static BasicProjector A() { return normalized(1, -1); }
  static BasicProjector L() { return normalized(1, {0, 1}); }
  static BasicProjector R() { return normalized(1, {0, -1}); }

  /// One of H, V, D, A, L, R.
  static std::optional<BasicProjector> named(std::string_view name) {
    if (name == "H") return H();
    if (name == "V") return V();
    if (name == "D") return D();
    if (name == "A") return A();
    if (name == "L") return L();
    if (name == "R") return R();
    return std::nullopt;
  }

  std::complex<Scalar> c_h() const { return jones_(0); }
  std::complex<Scalar> c_v() const { return jones_(1); }

  /// Components in {H, V}.
  const Jones<Scalar>& linear() const noexcept { return jones_; }
  /// Components in {L, R}.
  Jones<Scalar> circular() const { return circular_to_linear<Scalar>().adjoint() * jones_; }
  Jones<Scalar> in_basis(Basis b) const { return b == Basis::linear ? jones_ : circular(); }

 private:
  Jones<Scalar> jones_;
};

/// Pure two-photon polarization state.
template <typename Scalar>
class BasicBiphotonKet {
 public:
  static constexpr Scalar kNormTolerance = Scalar(1e-12);

  /// Throws DomainError unless the amplitudes have unit norm within 1e-12.
  BasicBiphotonKet(const Amplitudes4<Scalar>& amplitudes, Basis basis)
      : amplitudes_(amplitudes), basis_(basis) {
    if (std::abs(amplitudes_.squaredNorm() - Scalar(1)) > kNormTolerance) {
      throw DomainError("biphoton ket is not normalized");
    }
  }

  static BasicBiphotonKet normalized(const Amplitudes4<Scalar>& amplitudes, Basis basis) {
    const Scalar n = amplitudes.norm();
    if (!(n > 0)) throw DomainError("biphoton ket has zero norm");
    return BasicBiphotonKet(amplitudes / n, basis);
  }

  /// Product state |s> ⊗ |i>.
  static BasicBiphotonKet product(const BasicProjector<Scalar>& s,
                                  const BasicProjector<Scalar>& i) {
    return normalized(Eigen::kroneckerProduct(s.linear(), i.linear()), Basis::linear);
  }

  const Amplitudes4<Scalar>& amplitudes() const noexcept { return amplitudes_; }
  std::complex<Scalar> operator[](Eigen::Index k) const { return amplitudes_(k); }
  Basis basis() const noexcept { return basis_; }

 private:
  Amplitudes4<Scalar> amplitudes_;
  Basis basis_;
};

/// Two-qubit density matrix: Hermitian, unit trace, positive semidefinite.
template <typename Scalar>
class BasicDensityMatrix4 {
 public:
  static constexpr Scalar kHermitianTolerance = Scalar(1e-12);
  static constexpr Scalar kTraceTolerance = Scalar(1e-12);
  static constexpr Scalar kEigenvalueFloor = Scalar(-1e-9);

  /// Throws DomainError if any invariant is violated.
  BasicDensityMatrix4(const Matrix4c<Scalar>& m, Basis basis) : matrix_(m), basis_(basis) {
    if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance) {
      throw DomainError("density matrix is not Hermitian");
    }
    if (std::abs(matrix_.trace() - std::complex<Scalar>(1)) > kTraceTolerance) {
      throw DomainError("density matrix trace is not 1");
    }
    if (min_eigenvalue() < kEigenvalueFloor) {
      throw DomainError("density matrix is not positive semidefinite");
    }
  }

  /// Symmetrizes, divides by the trace and validates.
  static BasicDensityMatrix4 normalized(const Matrix4c<Scalar>& m, Basis basis) {
    Matrix4c<Scalar> h = (m + m.adjoint()) / Scalar(2);
    const Scalar tr = h.trace().real();
    if (!(tr > 0)) throw DomainError("density matrix has non-positive trace");
    return BasicDensityMatrix4(h / tr, basis);
  }

  static BasicDensityMatrix4 maximally_mixed(Basis basis = Basis::linear) {
    return BasicDensityMatrix4(Matrix4c<Scalar>::Identity() / Scalar(4), basis);
  }

  const Matrix4c<Scalar>& matrix() const noexcept { return matrix_; }
  Basis basis() const noexcept { return basis_; }

  Matrix4c<Scalar> matrix_in(Basis target) const {
    if (target == basis_) return matrix_;
    const Matrix4c<Scalar> u = basis_change<Scalar>(basis_, target);
    return u * matrix_ * u.adjoint();
  }

  BasicDensityMatrix4 in_basis(Basis target) const {
    return BasicDensityMatrix4::normalized(matrix_in(target), target);
  }

  /// Ascending. Values within solver round-off of zero are reported as zero.
  Eigen::Matrix<Scalar, 4, 1> eigenvalues() const {
    Eigen::Matrix<Scalar, 4, 1> ev =
        Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>>(matrix_, Eigen::EigenvaluesOnly)
            .eigenvalues();
    const Scalar dust = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * ev.cwiseAbs().sum();
    for (Eigen::Index k = 0; k < 4; ++k) {
      if (std::abs(ev(k)) <= dust) ev(k) = Scalar(0);
    }
    return ev;
  }
  Scalar min_eigenvalue() const { return eigenvalues().minCoeff(); }

 private:
  Matrix4c<Scalar> matrix_;
  Basis basis_;
};

using Projector = BasicProjector<double>;
using BiphotonKet = BasicBiphotonKet<double>;
using DensityMatrix4 = BasicDensityMatrix4<double>;

/// Amplitudes of |psi> = a0 |LR> + exp(i phi0) a1 |RL>.
struct PathAmplitudes {
  double a0;
  double a1;
  /// In (-pi, pi]; 0 or pi for states predicted from real coupling sums.
  double phi0;
};

/// Normalized coupling strengths of the LR and RL channels for a cascade.
///
/// LR takes x(alpha_s = +1, alpha_i = -1), RL takes x(-1, +1); helicity +1
/// is L. phi0 is pi when the two couplings have opposite sign. Throws
/// DegenerateError if both channels are forbidden.
PathAmplitudes predict_path_state(const CascadeLevels& levels);

template <typename Scalar = double>
BasicBiphotonKet<Scalar> ket_from_path(const PathAmplitudes& p) {
  using C = std::complex<Scalar>;
  Amplitudes4<Scalar> amps;
  // Keep the common real-sign case exactly real.
  const C rl = p.phi0 == 0.0                ? C(Scalar(p.a1))
               : p.phi0 == std::numbers::pi ? C(-Scalar(p.a1))
                                            : std::polar(Scalar(p.a1), Scalar(p.phi0));
  amps << C(0), C(Scalar(p.a0)), rl, C(0);
  return BasicBiphotonKet<Scalar>(amps, Basis::circular);
}

template <typename Scalar>
BasicBiphotonKet<Scalar> change_basis(const BasicBiphotonKet<Scalar>& k, Basis target) {
  if (k.basis() == target) return k;
  return BasicBiphotonKet<Scalar>::normalized(
      basis_change<Scalar>(k.basis(), target) * k.amplitudes(), target);
}

template <typename Scalar>
BasicDensityMatrix4<Scalar> density_from_ket(const BasicBiphotonKet<Scalar>& k) {
  const Amplitudes4<Scalar>& a = k.amplitudes();
  return BasicDensityMatrix4<Scalar>::normalized(a * a.adjoint(), k.basis());
}

/// <proj_s ⊗ proj_i | k>.
template <typename Scalar>
std::complex<Scalar> joint_projection_amplitude(const BasicBiphotonKet<Scalar>& k,
                                                const BasicProjector<Scalar>& proj_s,
                                                const BasicProjector<Scalar>& proj_i) {
  const Amplitudes4<Scalar> bra =
      Eigen::kroneckerProduct(proj_s.in_basis(k.basis()), proj_i.in_basis(k.basis()));
  return bra.dot(k.amplitudes());
}

/// Folds an angle into (-pi, pi].
inline double wrap_phase(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(phi, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w + 0.0;  // no negative zero
}

/// Relative amplitude R and phase phi of the Y path against the X path.
struct BeatParams {
  double R;
  double phi;
};

/// R = |A_Y / A_X|, phi = arg(A_Y / A_X) with A the joint projection
/// amplitudes. phi is 0 when A_Y vanishes. Throws DegenerateError when the X
/// path is projected out (|A_X| < 1e-12).
BeatParams beat_params(const BiphotonKet& ket_x, const BiphotonKet& ket_y, const Projector& proj_s,
                       const Projector& proj_i);

struct BeatSearchResult {
  bool attainable;
  Projector proj_s;
  Projector proj_i;
  BeatParams achieved;
  /// |A_Y/A_X - R e^{i phi}| at the best projector pair found.
  double residual;
};

/// Searches analyzer settings so that beat_params hits the requested (R, phi).
/// Multi-start least squares over the Poincaré-sphere angles of both
/// projectors; `attainable` is set when the residual is below `tolerance`.
BeatSearchResult find_projectors_for_beat(const BiphotonKet& ket_x, const BiphotonKet& ket_y,
                                          BeatParams target, double tolerance = 1e-9);

}  // namespace fwm
