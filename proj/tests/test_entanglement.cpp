#include "fwm/entanglement.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

using namespace fwm;
using C = std::complex<double>;

namespace {

Amplitudes4<double> random_amplitudes(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Amplitudes4<double> a;
  for (int k = 0; k < 4; ++k) a(k) = C(n(rng), n(rng));
  return a.normalized();
}

Matrix2c<double> random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix2c<double> g;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) g(r, c) = C(n(rng), n(rng));
  return Eigen::HouseholderQR<Matrix2c<double>>(g).householderQ();
}

DensityMatrix4 random_mixed(std::mt19937_64& rng, int rank) {
  Matrix4c<double> m = Matrix4c<double>::Zero();
  std::uniform_real_distribution<double> w(0.1, 1.0);
  for (int k = 0; k < rank; ++k) {
    const auto a = random_amplitudes(rng);
    m += w(rng) * a * a.adjoint();
  }
  return DensityMatrix4::normalized(m, Basis::linear);
}

BiphotonKet ket(C a, C b, C c, C d, Basis basis = Basis::circular) {
  Amplitudes4<double> v;
  v << a, b, c, d;
  return BiphotonKet::normalized(v, basis);
}

// Pure-state binary entropy, written out independently.
double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

}  // namespace

TEST(Purity, Examples) {
  EXPECT_NEAR(purity(density_from_ket(ket(0, 1, 0, 0))), 1.0, 1e-15);
  EXPECT_NEAR(purity(DensityMatrix4::maximally_mixed()), 0.25, 1e-15);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const double p = purity(random_mixed(rng, 3));
    EXPECT_GT(p, 0.25);
    EXPECT_LT(p, 1.0);
  }
}

TEST(Concurrence, BellAndProduct) {
  const double s = 1.0 / std::sqrt(2.0);
  const auto bell = density_from_ket(ket(0, s, s, 0));
  EXPECT_NEAR(concurrence(bell), 1.0, 1e-10);
  EXPECT_NEAR(entanglement_of_formation(bell), 1.0, 1e-10);
  const auto lr = density_from_ket(ket(0, 1, 0, 0));
  EXPECT_NEAR(concurrence(lr), 0.0, 1e-10);
  EXPECT_NEAR(entanglement_of_formation(lr), 0.0, 1e-10);
  EXPECT_NEAR(concurrence(DensityMatrix4::maximally_mixed()), 0.0, 1e-12);
}

TEST(Concurrence, PsiX) {
  // Unnormalized amplitudes as printed: 2·0.55·0.83 = 0.913.
  const auto psi = density_from_ket(ket(0, 0.55, -0.83, 0));
  const double c = concurrence(psi);
  EXPECT_NEAR(c, 2 * 0.55 * 0.83 / (0.55 * 0.55 + 0.83 * 0.83), 1e-12);
  EXPECT_NEAR(c, 0.913, 0.01);
  const double p = 0.5 * (1 + std::sqrt(1 - c * c));
  EXPECT_NEAR(entanglement_of_formation(psi), h2(p), 1e-12);
  EXPECT_NEAR(entanglement_of_formation_from_concurrence(0.913), 0.87637, 5e-5);
}

TEST(Concurrence, PureStateDeterminantOracle) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_amplitudes(rng);
    const double oracle = 2.0 * std::abs(a(0) * a(3) - a(1) * a(2));
    const auto rho = density_from_ket(BiphotonKet(a, Basis::linear));
    EXPECT_NEAR(concurrence(rho), oracle, 1e-10);
    EXPECT_NEAR(purity(rho), 1.0, 1e-12);
  }
}

TEST(Concurrence, BasisIndependent) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const DensityMatrix4 rho(random_mixed(rng, 2).matrix(), Basis::circular);
    EXPECT_NEAR(concurrence(rho), concurrence(rho.in_basis(Basis::linear)), 1e-10);
  }
}

TEST(Concurrence, LocalUnitaryInvariance) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 200; ++t) {
    const auto rho = random_mixed(rng, 1 + t % 4);
    const Matrix4c<double> u =
        Eigen::kroneckerProduct(random_unitary(rng), random_unitary(rng)).eval();
    const auto rotated =
        DensityMatrix4::normalized(u * rho.matrix() * u.adjoint(), Basis::linear);
    EXPECT_NEAR(concurrence(rotated), concurrence(rho), 1e-9);
    EXPECT_NEAR(entanglement_of_formation(rotated), entanglement_of_formation(rho), 1e-9);
  }
}

TEST(Concurrence, WernerStates) {
  // p|Φ+><Φ+| + (1-p) I/4 has C = max(0, (3p - 1)/2).
  const double s = 1.0 / std::sqrt(2.0);
  const auto phi = density_from_ket(ket(s, 0, 0, s, Basis::linear));
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    const auto w = DensityMatrix4::normalized(
        p * phi.matrix() + (1 - p) * Matrix4c<double>::Identity() / 4.0, Basis::linear);
    EXPECT_NEAR(concurrence(w), std::max(0.0, (3 * p - 1) / 2), 1e-10) << p;
  }
}

TEST(EntanglementOfFormation, MonotoneInConcurrence) {
  double previous = -1.0;
  for (int k = 0; k <= 200; ++k) {
    const double theta = 0.25 * std::numbers::pi * k / 200.0;
    const auto rho = density_from_ket(ket(std::cos(theta), 0, 0, std::sin(theta), Basis::linear));
    const double e = entanglement_of_formation(rho);
    EXPECT_GE(e, previous - 1e-12);
    previous = e;
  }
  EXPECT_NEAR(previous, 1.0, 1e-10);
}

TEST(EntanglementOfFormation, Endpoints) {
  EXPECT_EQ(entanglement_of_formation_from_concurrence(0.0), 0.0);
  EXPECT_NEAR(entanglement_of_formation_from_concurrence(1.0), 1.0, 1e-15);
}

TEST(Fidelity, Examples) {
  const auto target = ket(0, 0.55, -0.83, 0);
  EXPECT_NEAR(fidelity(density_from_ket(target), target), 1.0, 1e-12);
  EXPECT_NEAR(fidelity(density_from_ket(ket(0, 0.83, 0.55, 0)), target), 0.0, 1e-12);
  EXPECT_NEAR(fidelity(DensityMatrix4::maximally_mixed(), target), 0.25, 1e-12);
  EXPECT_NEAR(fidelity(DensityMatrix4::maximally_mixed(Basis::circular),
                       change_basis(target, Basis::linear)),
              0.25, 1e-12);
}

TEST(TraceDistance, Examples) {
  const auto a = density_from_ket(ket(0, 1, 0, 0));
  const auto b = density_from_ket(ket(0, 0, 1, 0));
  EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-12);
  EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-12);
  EXPECT_NEAR(trace_distance(a, a.in_basis(Basis::linear)), 0.0, 1e-12);
}

TEST(Metrics, Report) {
  const auto target = ket(0, 0.55, -0.83, 0);
  const auto m = metrics(density_from_ket(target), target);
  EXPECT_NEAR(m.purity, 1.0, 1e-12);
  ASSERT_TRUE(m.fidelity.has_value());
  EXPECT_NEAR(*m.fidelity, 1.0, 1e-12);
  EXPECT_FALSE(metrics(density_from_ket(target)).fidelity.has_value());
}
