#pragma once

// Angular momentum coupling for the cascade four-wave-mixing scheme
// g -> b -> e (two pump photons) followed by e -> d -> g (signal, idler).

namespace fwm {

/// Angular momentum state |j m> stored with doubled quantum numbers so that
/// half-integer values are exact.
class AngularMomentum {
 public:
  /// Throws DomainError unless two_j >= 0, |two_m| <= two_j and parities match.
  AngularMomentum(int two_j, int two_m);

  static AngularMomentum integer(int j, int m) { return {2 * j, 2 * m}; }

  int two_j() const noexcept { return two_j_; }
  int two_m() const noexcept { return two_m_; }
  double j() const noexcept { return 0.5 * two_j_; }
  double m() const noexcept { return 0.5 * two_m_; }

  friend bool operator==(const AngularMomentum&, const AngularMomentum&) = default;

 private:
  int two_j_;
  int two_m_;
};

/// True when (two_j, two_m) is a representable state.
bool is_valid_state(int two_j, int two_m) noexcept;

/// <j1 m1; j2 m2 | J M> in the Condon-Shortley convention.
///
/// Evaluated with the Racah sum in exact rational arithmetic; only the final
/// square root is taken in floating point. Returns 0 when M != m1 + m2 or the
/// triangle rule fails.
double clebsch_gordan(const AngularMomentum& j1, const AngularMomentum& j2,
                      const AngularMomentum& coupled);

/// Same as above on raw doubled quantum numbers; throws DomainError on invalid
/// states.
double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M);

/// Total angular momenta F of the ground (g), first-pump intermediate (b),
/// top (e) and decay-intermediate (d) hyperfine levels, doubled.
struct CascadeLevels {
  int two_f_g;
  int two_f_b;
  int two_f_e;
  int two_f_d;

  /// Integer-F convenience constructor.
  static CascadeLevels from_f(int f_g, int f_b, int f_e, int f_d);

  /// Rb-87 path X: 5S1/2 F=2, 5P1/2 F=2, 5D3/2 F=3, 5P3/2 F=3.
  static CascadeLevels path_x() { return from_f(2, 2, 3, 3); }
  /// Rb-87 path Y: decay through 5P3/2 F=2.
  static CascadeLevels path_y() { return from_f(2, 2, 3, 2); }

  /// Every adjacent pair along g-b-e-d-g couples to a photon (triangle rule
  /// with j = 1, no 0 -> 0).
  bool valid() const noexcept;

  friend bool operator==(const CascadeLevels&, const CascadeLevels&) = default;
};

/// Photon helicity; +1 carries one unit of angular momentum along the common
/// propagation (quantization) axis.
enum class Helicity : int { minus = -1, plus = +1 };

/// Coupling strength x(alpha_s, alpha_i) of one signal/idler helicity pair:
/// sum over ground sublevels m of
///   <g m; 1 -1 | b m-1> <b m-1; 1 +1 | e m>
///   <d m-alpha_s; 1 alpha_s | e m> <g m; 1 alpha_i | d m+alpha_i>.
/// Pumps drive Delta m = -1 then +1. Signal and idler share the intermediate
/// sublevel, so every term vanishes unless alpha_i = -alpha_s (the atom
/// returns to m). Terms with out-of-range projections are zero.
///
/// `m_margin` extends the m sum beyond +-F_g by that many (doubled) units; it
/// only exists to check that the extra terms are exactly zero.
double path_coupling_x(const CascadeLevels& levels, Helicity alpha_s, Helicity alpha_i,
                       int m_margin = 0);

}  // namespace fwm
