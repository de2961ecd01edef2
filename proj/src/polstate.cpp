#include "fwm/polstate.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "fwm/fitting.hpp"

namespace fwm {

std::string_view to_string(Basis basis) noexcept {
  return basis == Basis::circular ? "circular" : "linear";
}

Basis parse_basis(std::string_view name) {
  if (name == "circular") return Basis::circular;
  if (name == "linear") return Basis::linear;
  throw DomainError("unknown basis tag '" + std::string(name) + "'");
}

PathAmplitudes predict_path_state(const CascadeLevels& levels) {
  const double x_lr = path_coupling_x(levels, Helicity::plus, Helicity::minus);
  const double x_rl = path_coupling_x(levels, Helicity::minus, Helicity::plus);
  const double norm = std::hypot(x_lr, x_rl);
  if (!(norm > 1e-14)) {
    throw DegenerateError("both LR and RL channels are forbidden for these levels");
  }
  PathAmplitudes p{std::abs(x_lr) / norm, std::abs(x_rl) / norm, 0.0};
  if (x_lr * x_rl < 0.0) p.phi0 = std::numbers::pi;
  return p;
}

BeatParams beat_params(const BiphotonKet& ket_x, const BiphotonKet& ket_y, const Projector& proj_s,
                       const Projector& proj_i) {
  const std::complex<double> a_x = joint_projection_amplitude(ket_x, proj_s, proj_i);
  const std::complex<double> a_y = joint_projection_amplitude(ket_y, proj_s, proj_i);
  if (std::abs(a_x) < 1e-12) {
    throw DegenerateError("path X is projected out; swap the roles of the two paths");
  }
  if (std::abs(a_y) == 0.0) return {0.0, 0.0};
  const std::complex<double> ratio = a_y / a_x;
  return {std::abs(ratio), wrap_phase(std::arg(ratio))};
}

namespace {

Projector projector_from_angles(double theta, double chi) {
  return Projector::normalized(std::cos(theta), std::polar(std::sin(theta), chi));
}

}  // namespace

BeatSearchResult find_projectors_for_beat(const BiphotonKet& ket_x, const BiphotonKet& ket_y,
                                          BeatParams target, double tolerance) {
  if (target.R < 0.0) throw DomainError("target R must be non-negative");
  const std::complex<double> wanted = std::polar(target.R, target.phi);

  const ResidualFunction residuals = [&](const Eigen::VectorXd& a) {
    const Projector s = projector_from_angles(a(0), a(1));
    const Projector i = projector_from_angles(a(2), a(3));
    const std::complex<double> a_x = joint_projection_amplitude(ket_x, s, i);
    const std::complex<double> a_y = joint_projection_amplitude(ket_y, s, i);
    Eigen::VectorXd r(2);
    if (std::abs(a_x) < 1e-12) {
      r.setConstant(1e6);
      return r;
    }
    const std::complex<double> d = a_y / a_x - wanted;
    r << d.real(), d.imag();
    return r;
  };

  LmOptions options;
  options.max_iterations = 300;

  constexpr std::array<double, 4> thetas{0.2, 0.6, 1.0, 1.4};
  constexpr std::array<double, 4> chis{0.0, 1.5707963267948966, 3.141592653589793,
                                       4.71238898038469};

  Eigen::VectorXd best;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> starts;
  for (double ts : thetas) {
    for (double cs : chis) {
      for (double ti : thetas) {
        for (double ci : chis) starts.push_back(Eigen::Vector4d(ts, cs, ti, ci));
      }
    }
  }
  for (const Eigen::VectorXd& start : starts) {
    const LmResult fit = levenberg_marquardt(residuals, start, options);
    const double res = std::sqrt(fit.chi2);
    if (res < best_residual) {
      best_residual = res;
      best = fit.params;
    }
    if (best_residual < tolerance) break;
  }

  const Projector s = projector_from_angles(best(0), best(1));
  const Projector i = projector_from_angles(best(2), best(3));
  BeatParams achieved{0.0, 0.0};
  try {
    achieved = beat_params(ket_x, ket_y, s, i);
  } catch (const DegenerateError&) {
    best_residual = std::numeric_limits<double>::infinity();
  }
  return {best_residual < tolerance, s, i, achieved, best_residual};
}

}  // namespace fwm
