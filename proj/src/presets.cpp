#include "fwm/presets.hpp"

#include <numbers>

#include "fwm/angmom.hpp"
#include "fwm/error.hpp"

namespace fwm {

Projector fig3_idler_projector() { return Projector::normalized({0.7, 0.57}, {0.0, 0.41}); }

namespace {

BeatModelParams beat_preset(double G0, double R, double phi) {
  BeatModelParams p;
  p.G0 = G0;
  p.tau_x = kTauX;
  p.tau_y = kTauY;
  p.R = R;
  p.phi = phi;
  p.delta = kHyperfineBeatFrequency;
  p.background = 1.0;
  return p;
}

}  // namespace

std::vector<std::string> g2_preset_names() {
  return {"fig2x", "fig2y", "fig3", "fig4a", "fig4b", "fig4c"};
}

G2Preset g2_preset(std::string_view name) {
  constexpr double pi = std::numbers::pi;
  if (name == "fig2x") {
    return {"fig2x", SinglePathParams{1500.0, kRiseX, kTauX, 2.0}, 1.0, -30.0, 80.0};
  }
  if (name == "fig2y") {
    return {"fig2y", SinglePathParams{1200.0, kRiseY, kTauY, 2.0}, 1.0, -30.0, 120.0};
  }
  if (name == "fig3") {
    const BiphotonKet x = ket_from_path(predict_path_state(CascadeLevels::path_x()));
    const BiphotonKet y = ket_from_path(predict_path_state(CascadeLevels::path_y()));
    const BeatParams bp = beat_params(x, y, Projector::L(), fig3_idler_projector());
    return {"fig3", beat_preset(10.0, bp.R, bp.phi), 0.1, -10.0, 60.0};
  }
  if (name == "fig4a") return {"fig4a", beat_preset(16.0, 2.86e-2, pi), 0.1, -10.0, 60.0};
  if (name == "fig4b") return {"fig4b", beat_preset(10.0, 1.43, 0.0), 0.1, -10.0, 60.0};
  if (name == "fig4c") return {"fig4c", beat_preset(16.0, 0.5, pi), 0.1, -10.0, 60.0};
  throw DomainError("unknown preset '" + std::string(name) + "'");
}

}  // namespace fwm
