#pragma once

// Time-resolved signal/idler coincidence models and fits.
//
// All times are in ns, angular frequencies in rad/ns.

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fwm/fitting.hpp"

namespace fwm {

/// 2π × 266 MHz, the 5P3/2 F=3 / F=2 hyperfine splitting.
inline constexpr double kHyperfineBeatFrequency = 2.0 * std::numbers::pi * 0.266;

/// Rise/decay shape of one decay path; G0 is the peak density at Δt = 0.
struct SinglePathParams {
  double G0 = 1.0;
  double tau_r = 1.0;
  double tau_d = 1.0;
  double background = 0.0;

  /// Throws DomainError on G0 <= 0, non-positive times or negative background.
  void validate() const;
};

/// Two-path interference. The amplitude scale enters squared (G0²).
struct BeatModelParams {
  double G0 = 1.0;
  double tau_x = 1.0;
  double tau_y = 1.0;
  double R = 0.0;
  double phi = 0.0;
  double delta = kHyperfineBeatFrequency;
  double background = 0.0;

  void validate() const;
};

using Model = std::variant<SinglePathParams, BeatModelParams>;
using ModelCurve = std::function<double(double)>;

double g2_single(double dt, const SinglePathParams& p);

/// Θ(Δt) G0² [e^{-Δt/τx} + R² e^{-Δt/τy} + 2R e^{-Δt(τx+τy)/(2τxτy)} cos(δΔt + φ)]
/// plus background; exactly the background for Δt < 0.
double g2_beats(double dt, const BeatModelParams& p);

/// Path amplitudes c_X, c_Y at Δt. The phase φ enters as e^{iφ}; `carrier`
/// is the idler angular frequency ω_i, a common phase that drops out of
/// |c_X + c_Y|².
std::pair<std::complex<double>, std::complex<double>> path_amplitudes(
    double dt, const BeatModelParams& p, double carrier = 0.0);

/// |c_X + c_Y|² + background, evaluated from the complex amplitudes.
double g2_beats_from_amplitudes(double dt, const BeatModelParams& p);

/// Local visibility of the beat term, 2R e^{-Δt(τx+τy)/(2τxτy)} /
/// (e^{-Δt/τx} + R² e^{-Δt/τy}); equals 2R/(1+R²) at Δt = 0⁺.
double beat_contrast(const BeatModelParams& p, double dt = 0.0);

ModelCurve model_curve(const Model& model);

/// Discontinuities of the model curve (Δt = 0 for the beat model).
std::vector<double> model_breakpoints(const Model& model);

struct CoincidenceHistogram {
  double bin_width = 1.0;
  double t_start = 0.0;
  /// Non-negative; integral for measured or simulated data.
  std::vector<double> counts;
  std::map<std::string, std::string> metadata;

  std::size_t size() const noexcept { return counts.size(); }
  double bin_start(std::size_t i) const { return t_start + bin_width * static_cast<double>(i); }
  double bin_center(std::size_t i) const { return bin_start(i) + 0.5 * bin_width; }

  /// Throws DomainError unless bin_width > 0, >= 2 bins, and counts >= 0.
  void validate() const;
};

/// Mean of the curve over [t0, t0 + width) by the midpoint rule.
double bin_average(const ModelCurve& curve, double t0, double width, int subsamples = 8);

/// Noise-free counts per bin (model values are in counts per bin).
std::vector<double> expected_histogram(const ModelCurve& curve, double bin_width, double t_begin,
                                       double t_end, int subsamples = 8);

/// Poisson draw per bin around expected_histogram; bin k uses a generator
/// seeded by (seed, k). The range is [t_begin, t_end) in whole bins.
CoincidenceHistogram simulate_histogram(const ModelCurve& curve, double bin_width, double t_begin,
                                        double t_end, std::uint64_t seed);
CoincidenceHistogram simulate_histogram(const Model& model, double bin_width, double t_begin,
                                        double t_end, std::uint64_t seed);

/// Gaussian timing jitter of width sigma (truncated at ±6σ). `breakpoints`
/// lists discontinuities of the input curve so the quadrature can split at
/// them. sigma = 0 returns the curve unchanged.
ModelCurve convolve_jitter(ModelCurve curve, double sigma, std::vector<double> breakpoints = {0.0});

struct FitWindow {
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
};

struct SingleFitOptions {
  /// Fit a time offset t0 of the Δt axis.
  bool fit_offset = false;
  /// Known Gaussian detector jitter folded into the model [ns].
  double jitter = 0.0;
  /// Only bins whose centers fall inside are fitted.
  FitWindow window;
  LmOptions lm;
};

struct SingleFit {
  SinglePathParams params;
  SinglePathParams sigmas;
  double offset = 0.0;
  double offset_sigma = 0.0;
  /// Poisson deviance at the solution; behaves as a chi-square for large counts.
  double chi2 = 0.0;
  double chi2_reduced = 0.0;
  int n_dof = 0;
  bool converged = false;
  int iterations = 0;
};

/// Poisson maximum-likelihood fit of g2_single, done as Levenberg-Marquardt on
/// signed deviance residuals. Sigmas come from the inverse Gauss-Newton
/// curvature at the solution.
/// Throws DegenerateError on a singular Jacobian and ConvergenceError<SingleFit>
/// if the iteration cap is hit.
SingleFit fit_single(const CoincidenceHistogram& h, const SinglePathParams& init,
                     const SingleFitOptions& options = {});

struct BeatFitOptions {
  bool free_tau_x = false;
  bool free_tau_y = false;
  bool free_R = false;
  bool free_phi = false;
  bool free_delta = false;
  bool fit_offset = false;
  /// Known Gaussian detector jitter folded into the model [ns].
  double jitter = 0.0;
  FitWindow window;
  LmOptions lm;
};

struct BeatFit {
  BeatModelParams params;
  /// Zero for parameters held fixed.
  BeatModelParams sigmas;
  /// G0², the quantity actually fitted; may go negative for null data.
  double amplitude = 0.0;
  double amplitude_sigma = 0.0;
  double offset = 0.0;
  double offset_sigma = 0.0;
  double chi2 = 0.0;
  double chi2_reduced = 0.0;
  int n_dof = 0;
  bool converged = false;
  int iterations = 0;
};

/// Fits G0 and the background with τx, τy, R, φ, δ held at `start` unless
/// unlocked in `options`.
BeatFit fit_beats(const CoincidenceHistogram& h, const BeatModelParams& start,
                  const BeatFitOptions& options = {});

}  // namespace fwm
