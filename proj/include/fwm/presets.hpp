#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fwm/polstate.hpp"
#include "fwm/timecorr.hpp"

namespace fwm {

/// Published decay constants (ns).
inline constexpr double kTauX = 5.6;
inline constexpr double kTauY = 13.1;
inline constexpr double kRiseX = 3.1;
inline constexpr double kRiseY = 3.3;

/// Synthetic-histogram recipe reproducing one of the measured figures.
struct G2Preset {
  std::string name;
  Model model;
  double bin_width;
  double t_begin;
  double t_end;
};

/// fig2x, fig2y: single-path rise/decay at 1 ns binning.
/// fig3: two-path beats with (R, φ) from the predicted path states projected
///   onto signal |L> and idler (0.7+0.57i)|H> + 0.41i|V>.
/// fig4a, fig4b, fig4c: two-path beats at (R, φ) = (2.86e-2, π), (1.43, 0), (0.5, π).
/// Throws DomainError for unknown names.
G2Preset g2_preset(std::string_view name);

std::vector<std::string> g2_preset_names();

/// Idler analyzer setting used for the fig3 preset.
Projector fig3_idler_projector();

}  // namespace fwm
