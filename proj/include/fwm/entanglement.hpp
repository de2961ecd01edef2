#pragma once

// Scalar indicators for two-qubit polarization states.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "fwm/polstate.hpp"

namespace fwm {

/// Tr[rho²].
template <typename Scalar>
Scalar purity(const BasicDensityMatrix4<Scalar>& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

/// Eigen-decomposition of a PSD matrix with eigenvalue dust removed.
///
/// Eigenvalues below 64·eps·trace (including the slightly negative values a
/// reconstruction may leave) are set to exactly zero; otherwise they would
/// surface as O(√eps) errors in the concurrence of near-pure states.
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, 4, 4> psd_square_root_factor(const Matrix4c<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>> eig(m);
  const Scalar floor = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                       std::max(m.trace().real(), Scalar(0));
  Eigen::Matrix<Scalar, 4, 1> root = eig.eigenvalues();
  for (Eigen::Index k = 0; k < 4; ++k) root(k) = root(k) > floor ? std::sqrt(root(k)) : Scalar(0);
  // W with W W† = m.
  return eig.eigenvectors() * root.template cast<std::complex<Scalar>>().asDiagonal();
}

/// Wootters concurrence.
///
/// The decreasing λ_i are the square roots of the eigenvalues of
/// √ρ ρ̃ √ρ, ρ̃ = (σy⊗σy) ρ* (σy⊗σy), with ρ* taken in the {H, V} basis. They
/// are obtained as the singular values of Wᵀ (σy⊗σy) W for ρ = W W†, which
/// is the same spectrum without an extra square root of near-zero values.
template <typename Scalar>
Scalar concurrence(const BasicDensityMatrix4<Scalar>& rho) {
  using C = std::complex<Scalar>;
  const Matrix4c<Scalar> m = rho.matrix_in(Basis::linear);
  const Matrix4c<Scalar> w = psd_square_root_factor<Scalar>(m);

  Matrix2c<Scalar> sigma_y;
  sigma_y << C(0), C(0, -1), C(0, 1), C(0);
  const Matrix4c<Scalar> flip = Eigen::kroneckerProduct(sigma_y, sigma_y);

  const Matrix4c<Scalar> b = w.transpose() * flip * w;
  Eigen::Matrix<Scalar, 4, 1> lambda = Eigen::JacobiSVD<Matrix4c<Scalar>>(b).singularValues();
  std::sort(lambda.data(), lambda.data() + 4, std::greater<Scalar>());
  return std::max(Scalar(0), lambda(0) - lambda(1) - lambda(2) - lambda(3));
}

/// Entanglement of formation from a concurrence value.
template <typename Scalar>
Scalar entanglement_of_formation_from_concurrence(Scalar c) {
  c = std::clamp(c, Scalar(0), Scalar(1));
  const Scalar x = (Scalar(1) + std::sqrt(Scalar(1) - c * c)) / Scalar(2);
  auto h = [](Scalar p) { return p > Scalar(0) ? -p * std::log2(p) : Scalar(0); };
  return h(x) + h(Scalar(1) - x);
}

template <typename Scalar>
Scalar entanglement_of_formation(const BasicDensityMatrix4<Scalar>& rho) {
  return entanglement_of_formation_from_concurrence(concurrence(rho));
}

/// <target| rho |target>.
template <typename Scalar>
Scalar fidelity(const BasicDensityMatrix4<Scalar>& rho, const BasicBiphotonKet<Scalar>& target) {
  const Amplitudes4<Scalar> psi = change_basis(target, Basis::linear).amplitudes();
  return std::clamp(psi.dot(rho.matrix_in(Basis::linear) * psi).real(), Scalar(0), Scalar(1));
}

/// ½ Tr|a - b|.
template <typename Scalar>
Scalar trace_distance(const Matrix4c<Scalar>& a, const Matrix4c<Scalar>& b) {
  const Matrix4c<Scalar> d = a - b;
  const Matrix4c<Scalar> h = (d + d.adjoint()) / Scalar(2);
  return Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>>(h, Eigen::EigenvaluesOnly)
             .eigenvalues()
             .cwiseAbs()
             .sum() /
         Scalar(2);
}

template <typename Scalar>
Scalar trace_distance(const BasicDensityMatrix4<Scalar>& a, const BasicDensityMatrix4<Scalar>& b) {
  return trace_distance<Scalar>(a.matrix_in(Basis::linear), b.matrix_in(Basis::linear));
}

struct MetricReport {
  double purity;
  double concurrence;
  double eof;
  std::optional<double> fidelity;
};

inline MetricReport metrics(const DensityMatrix4& rho,
                            const std::optional<BiphotonKet>& target = std::nullopt) {
  const double c = concurrence(rho);
  MetricReport r{purity(rho), c, entanglement_of_formation_from_concurrence(c), std::nullopt};
  if (target) r.fidelity = fidelity(rho, *target);
  return r;
}

}  // namespace fwm
