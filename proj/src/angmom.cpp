#include "fwm/angmom.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "fwm/error.hpp"

namespace fwm {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_int factorial(int n) {
  cpp_int f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Half of a doubled quantity that is known to be even.
int half(int doubled) { return doubled / 2; }

bool triangle(int two_a, int two_b, int two_c) {
  return two_c <= two_a + two_b && two_c >= std::abs(two_a - two_b) &&
         (two_a + two_b + two_c) % 2 == 0;
}

void require_state(int two_j, int two_m) {
  if (!is_valid_state(two_j, two_m)) {
    throw DomainError("invalid angular momentum state: 2j=" + std::to_string(two_j) +
                      ", 2m=" + std::to_string(two_m));
  }
}

}  // namespace

bool is_valid_state(int two_j, int two_m) noexcept {
  return two_j >= 0 && std::abs(two_m) <= two_j && (two_j - two_m) % 2 == 0;
}

AngularMomentum::AngularMomentum(int two_j, int two_m) : two_j_(two_j), two_m_(two_m) {
  require_state(two_j, two_m);
}

double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M) {
  require_state(two_j1, two_m1);
  require_state(two_j2, two_m2);
  require_state(two_J, two_M);

  if (two_m1 + two_m2 != two_M) return 0.0;
  if (!triangle(two_j1, two_j2, two_J)) return 0.0;

  const int a = half(two_j1 + two_j2 - two_J);
  const int b = half(two_j1 - two_j2 + two_J);
  const int c = half(-two_j1 + two_j2 + two_J);
  const int d = half(two_j1 + two_j2 + two_J) + 1;

  const int j1_minus_m1 = half(two_j1 - two_m1);
  const int j2_plus_m2 = half(two_j2 + two_m2);
  const int shift1 = half(two_J - two_j2 + two_m1);
  const int shift2 = half(two_J - two_j1 - two_m2);

  cpp_rational prefactor = cpp_rational(cpp_int(two_J + 1) * factorial(a) * factorial(b) *
                                        factorial(c), factorial(d));
  prefactor *= factorial(half(two_j1 + two_m1)) * factorial(j1_minus_m1) *
               factorial(j2_plus_m2) * factorial(half(two_j2 - two_m2)) *
               factorial(half(two_J + two_M)) * factorial(half(two_J - two_M));

  const int k_min = std::max({0, -shift1, -shift2});
  const int k_max = std::min({a, j1_minus_m1, j2_plus_m2});

  cpp_rational sum = 0;
  for (int k = k_min; k <= k_max; ++k) {
    const cpp_int denom = factorial(k) * factorial(a - k) * factorial(j1_minus_m1 - k) *
                          factorial(j2_plus_m2 - k) * factorial(shift1 + k) *
                          factorial(shift2 + k);
    const cpp_rational term(1, denom);
    if (k % 2 == 0) {
      sum += term;
    } else {
      sum -= term;
    }
  }
  if (sum == 0) return 0.0;

  const cpp_rational squared = prefactor * sum * sum;
  const double magnitude = std::sqrt(squared.convert_to<double>());
  return sum < 0 ? -magnitude : magnitude;
}

double clebsch_gordan(const AngularMomentum& j1, const AngularMomentum& j2,
                      const AngularMomentum& coupled) {
  return clebsch_gordan(j1.two_j(), j1.two_m(), j2.two_j(), j2.two_m(), coupled.two_j(),
                        coupled.two_m());
}

CascadeLevels CascadeLevels::from_f(int f_g, int f_b, int f_e, int f_d) {
  CascadeLevels levels{2 * f_g, 2 * f_b, 2 * f_e, 2 * f_d};
  if (f_g < 0 || f_b < 0 || f_e < 0 || f_d < 0) {
    throw DomainError("hyperfine F must be non-negative");
  }
  return levels;
}

bool CascadeLevels::valid() const noexcept {
  const int two_f[] = {two_f_g, two_f_b, two_f_e, two_f_d};
  for (int f : two_f) {
    if (f < 0) return false;
  }
  // All levels share the ground-state parity; photons change F by an integer.
  for (int f : two_f) {
    if ((f - two_f_g) % 2 != 0) return false;
  }
  return triangle(two_f_g, 2, two_f_b) && triangle(two_f_b, 2, two_f_e) &&
         triangle(two_f_e, 2, two_f_d) && triangle(two_f_d, 2, two_f_g);
}

double path_coupling_x(const CascadeLevels& levels, Helicity alpha_s, Helicity alpha_i,
                       int m_margin) {
  if (!levels.valid()) throw DomainError("cascade levels violate photon selection rules");

  const int two_as = 2 * static_cast<int>(alpha_s);
  const int two_ai = 2 * static_cast<int>(alpha_i);
  const int photon = 2;

  // Zero (not an error) whenever a projection leaves its multiplet.
  auto cg = [](int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M) {
    if (!is_valid_state(two_j1, two_m1) || !is_valid_state(two_J, two_M)) return 0.0;
    return clebsch_gordan(two_j1, two_m1, two_j2, two_m2, two_J, two_M);
  };

  const int two_m_limit = levels.two_f_g + 2 * m_margin;
  double sum = 0.0;
  for (int two_m = -two_m_limit; two_m <= two_m_limit; two_m += 2) {
    const int two_m_b = two_m - 2;
    const int two_m_d = two_m - two_as;
    // Idler must take the atom from the shared d sublevel back to m.
    if (two_m + two_ai != two_m_d) continue;

    const double term = cg(levels.two_f_g, two_m, photon, -2, levels.two_f_b, two_m_b) *
                        cg(levels.two_f_b, two_m_b, photon, 2, levels.two_f_e, two_m) *
                        cg(levels.two_f_d, two_m_d, photon, two_as, levels.two_f_e, two_m) *
                        cg(levels.two_f_g, two_m, photon, two_ai, levels.two_f_d, two_m_d);
    sum += term;
  }
  return sum;
}

}  // namespace fwm
