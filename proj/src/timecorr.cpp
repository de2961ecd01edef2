#include "fwm/timecorr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "fwm/error.hpp"
#include "fwm/tomography.hpp"

namespace fwm {

void SinglePathParams::validate() const {
  if (!(G0 > 0.0)) throw DomainError("G0 must be > 0");
  if (!(tau_r > 0.0) || !(tau_d > 0.0)) throw DomainError("time constants must be > 0");
  if (!(background >= 0.0)) throw DomainError("background must be >= 0");
}

void BeatModelParams::validate() const {
  if (!(G0 >= 0.0)) throw DomainError("G0 must be >= 0");
  if (!(tau_x > 0.0) || !(tau_y > 0.0)) throw DomainError("time constants must be > 0");
  if (!(R >= 0.0)) throw DomainError("R must be >= 0");
  if (!(delta > 0.0)) throw DomainError("delta must be > 0");
  if (!(background >= 0.0)) throw DomainError("background must be >= 0");
}

void CoincidenceHistogram::validate() const {
  if (!(bin_width > 0.0)) throw DomainError("bin width must be > 0");
  if (counts.size() < 2) throw DomainError("histogram needs at least two bins");
  for (double c : counts) {
    if (!(c >= 0.0)) throw DomainError("histogram counts must be >= 0");
  }
}

double g2_single(double dt, const SinglePathParams& p) {
  const double shape = dt < 0.0 ? std::exp(dt / p.tau_r) : std::exp(-dt / p.tau_d);
  return p.G0 * shape + p.background;
}

double g2_beats(double dt, const BeatModelParams& p) {
  if (dt < 0.0) return p.background;
  const double mixed_rate = (p.tau_x + p.tau_y) / (2.0 * p.tau_x * p.tau_y);
  const double bracket = std::exp(-dt / p.tau_x) + p.R * p.R * std::exp(-dt / p.tau_y) +
                         2.0 * p.R * std::exp(-dt * mixed_rate) * std::cos(p.delta * dt + p.phi);
  return p.G0 * p.G0 * bracket + p.background;
}

std::pair<std::complex<double>, std::complex<double>> path_amplitudes(double dt,
                                                                      const BeatModelParams& p,
                                                                      double carrier) {
  if (dt < 0.0) return {0.0, 0.0};
  using namespace std::complex_literals;
  const std::complex<double> c_x = p.G0 * std::exp(-dt / (2.0 * p.tau_x) - 1i * carrier * dt);
  const std::complex<double> c_y =
      p.G0 * p.R * std::exp(-dt / (2.0 * p.tau_y) - 1i * ((carrier + p.delta) * dt + p.phi));
  return {c_x, c_y};
}

double g2_beats_from_amplitudes(double dt, const BeatModelParams& p) {
  const auto [c_x, c_y] = path_amplitudes(dt, p);
  return std::norm(c_x + c_y) + p.background;
}

double beat_contrast(const BeatModelParams& p, double dt) {
  const double mixed_rate = (p.tau_x + p.tau_y) / (2.0 * p.tau_x * p.tau_y);
  const double steady = std::exp(-dt / p.tau_x) + p.R * p.R * std::exp(-dt / p.tau_y);
  return 2.0 * p.R * std::exp(-dt * mixed_rate) / steady;
}

ModelCurve model_curve(const Model& model) {
  return std::visit(
      [](const auto& p) -> ModelCurve {
        p.validate();
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SinglePathParams>) {
          return [p](double t) { return g2_single(t, p); };
        } else {
          return [p](double t) { return g2_beats(t, p); };
        }
      },
      model);
}

std::vector<double> model_breakpoints(const Model& model) {
  return std::holds_alternative<BeatModelParams>(model) ? std::vector<double>{0.0}
                                                        : std::vector<double>{};
}

double bin_average(const ModelCurve& curve, double t0, double width, int subsamples) {
  double sum = 0.0;
  for (int k = 0; k < subsamples; ++k) sum += curve(t0 + (k + 0.5) * width / subsamples);
  return sum / subsamples;
}

namespace {

std::size_t bin_count(double bin_width, double t_begin, double t_end) {
  if (!(bin_width > 0.0)) throw DomainError("bin width must be > 0");
  if (!(t_end > t_begin)) throw DomainError("time range must be ordered");
  return static_cast<std::size_t>(std::floor((t_end - t_begin) / bin_width + 1e-9));
}

}  // namespace

std::vector<double> expected_histogram(const ModelCurve& curve, double bin_width, double t_begin,
                                       double t_end, int subsamples) {
  const std::size_t n = bin_count(bin_width, t_begin, t_end);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = bin_average(curve, t_begin + bin_width * static_cast<double>(i), bin_width,
                         subsamples);
  }
  return out;
}

CoincidenceHistogram simulate_histogram(const ModelCurve& curve, double bin_width, double t_begin,
                                        double t_end, std::uint64_t seed) {
  CoincidenceHistogram h;
  h.bin_width = bin_width;
  h.t_start = t_begin;
  h.counts = expected_histogram(curve, bin_width, t_begin, t_end);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double mean = h.counts[i];
    if (mean > 0.0) {
      std::mt19937_64 gen(derive_seed(seed, i));
      std::poisson_distribution<long long> dist(mean);
      h.counts[i] = static_cast<double>(dist(gen));
    } else {
      h.counts[i] = 0.0;
    }
  }
  h.metadata["seed"] = std::to_string(seed);
  return h;
}

CoincidenceHistogram simulate_histogram(const Model& model, double bin_width, double t_begin,
                                        double t_end, std::uint64_t seed) {
  return simulate_histogram(model_curve(model), bin_width, t_begin, t_end, seed);
}

namespace {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_n.
QuadratureRule gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

ModelCurve convolve_jitter(ModelCurve curve, double sigma, std::vector<double> breakpoints) {
  if (!(sigma >= 0.0)) throw DomainError("jitter sigma must be >= 0");
  if (sigma == 0.0) return curve;

  constexpr int kPanels = 24;
  const QuadratureRule rule = gauss_legendre(10);
  const double half_width = 6.0 * sigma;
  // Normalized on the truncated support, so the convolution conserves area.
  const double kernel_mass = std::erf(6.0 / std::numbers::sqrt2);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi) * kernel_mass);

  return [curve = std::move(curve), breakpoints = std::move(breakpoints), rule, sigma,
          half_width, norm](double t) {
    // Split the kernel support wherever the curve argument t - u crosses a
    // discontinuity.
    std::vector<double> edges{-half_width, half_width};
    for (double b : breakpoints) {
      const double u = t - b;
      if (u > -half_width && u < half_width) edges.push_back(u);
    }
    std::sort(edges.begin(), edges.end());

    double total = 0.0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const double panel = (edges[e + 1] - edges[e]) / kPanels;
      for (int k = 0; k < kPanels; ++k) {
        const double mid = edges[e] + (k + 0.5) * panel;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
          const double u = mid + 0.5 * panel * rule.nodes[q];
          const double kernel = std::exp(-0.5 * (u / sigma) * (u / sigma));
          total += 0.5 * panel * rule.weights[q] * kernel * curve(t - u);
        }
      }
    }
    return norm * total;
  };
}

namespace {

struct FitData {
  std::vector<double> starts;
  std::vector<double> counts;
  double bin_width;
};

FitData select_bins(const CoincidenceHistogram& h, const FitWindow& window) {
  h.validate();
  FitData d;
  d.bin_width = h.bin_width;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double c = h.bin_center(i);
    if (c < window.t_min || c > window.t_max) continue;
    d.starts.push_back(h.bin_start(i));
    d.counts.push_back(h.counts[i]);
  }
  return d;
}

// Signed square root of the Poisson deviance term, so that the sum of squares
// is the deviance and its minimum is the Poisson maximum-likelihood fit.
double deviance_residual(double n, double mu) {
  if (!(mu > 0.0)) {
    return n == 0.0 && mu == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  const double term = n > 0.0 ? mu - n + n * std::log(n / mu) : mu;
  return std::copysign(std::sqrt(2.0 * std::max(term, 0.0)), n - mu);
}

ResidualFunction weighted_residuals(const FitData& d,
                                    std::function<ModelCurve(const Eigen::VectorXd&)> curve_of) {
  return [&d, curve_of = std::move(curve_of)](const Eigen::VectorXd& x) {
    const ModelCurve curve = curve_of(x);
    Eigen::VectorXd r(static_cast<Eigen::Index>(d.counts.size()));
    for (std::size_t i = 0; i < d.counts.size(); ++i) {
      const double mu = bin_average(curve, d.starts[i], d.bin_width);
      r(static_cast<Eigen::Index>(i)) = deviance_residual(d.counts[i], mu);
    }
    return r;
  };
}

double sigma_of(const Eigen::MatrixXd& cov, Eigen::Index k) { return std::sqrt(cov(k, k)); }

}  // namespace

SingleFit fit_single(const CoincidenceHistogram& h, const SinglePathParams& init,
                     const SingleFitOptions& options) {
  init.validate();
  const FitData data = select_bins(h, options.window);
  const int n_free = options.fit_offset ? 5 : 4;
  if (static_cast<int>(data.counts.size()) <= n_free) {
    throw DomainError("fit window holds too few bins");
  }
  const bool has_negative = std::any_of(data.starts.begin(), data.starts.end(),
                                        [](double t) { return t < 0.0; });
  const bool has_positive = std::any_of(data.starts.begin(), data.starts.end(),
                                        [&](double t) { return t + data.bin_width > 0.0; });
  if (!has_negative || !has_positive) {
    throw DomainError("histogram must cover both sides of zero delay");
  }

  auto params_of = [](const Eigen::VectorXd& x) {
    return SinglePathParams{x(0), x(1), x(2), x(3)};
  };
  const double jitter = options.jitter;
  if (!(jitter >= 0.0)) throw DomainError("jitter sigma must be >= 0");
  const ResidualFunction residuals =
      weighted_residuals(data, [&](const Eigen::VectorXd& x) -> ModelCurve {
        const SinglePathParams p = params_of(x);
        const double t0 = x.size() > 4 ? x(4) : 0.0;
        const ModelCurve curve = [p, t0](double t) { return g2_single(t - t0, p); };
        return jitter > 0.0 ? convolve_jitter(curve, jitter, {t0}) : curve;
      });
  const FeasibleFunction feasible = [](const Eigen::VectorXd& x) {
    return x(0) > 0.0 && x(1) > 0.0 && x(2) > 0.0;
  };

  Eigen::VectorXd start(n_free);
  start.head<4>() << init.G0, init.tau_r, init.tau_d, init.background;
  if (options.fit_offset) start(4) = 0.0;

  const LmResult lm = levenberg_marquardt(residuals, start, options.lm, feasible);

  SingleFit fit;
  fit.params = params_of(lm.params);
  fit.offset = options.fit_offset ? lm.params(4) : 0.0;
  fit.chi2 = lm.chi2;
  fit.n_dof = static_cast<int>(data.counts.size()) - n_free;
  fit.chi2_reduced = lm.chi2 / fit.n_dof;
  fit.converged = lm.converged;
  fit.iterations = lm.iterations;
  if (lm.covariance.size() == 0) {
    throw DegenerateError("fit is degenerate: singular Jacobian at the solution");
  }
  fit.sigmas = {sigma_of(lm.covariance, 0), sigma_of(lm.covariance, 1),
                sigma_of(lm.covariance, 2), sigma_of(lm.covariance, 3)};
  if (options.fit_offset) fit.offset_sigma = sigma_of(lm.covariance, 4);
  if (!lm.converged) {
    throw ConvergenceError<SingleFit>("single-path fit did not converge", fit);
  }
  return fit;
}

BeatFit fit_beats(const CoincidenceHistogram& h, const BeatModelParams& start,
                  const BeatFitOptions& options) {
  start.validate();
  const FitData data = select_bins(h, options.window);

  // Parameter layout: amplitude (G0²), background, then unlocked extras.
  enum Slot { kTauX, kTauY, kR, kPhi, kDelta, kOffset, kSlots };
  const bool unlocked[kSlots] = {options.free_tau_x, options.free_tau_y, options.free_R,
                                 options.free_phi,   options.free_delta, options.fit_offset};
  int index[kSlots];
  int n_free = 2;
  for (int s = 0; s < kSlots; ++s) index[s] = unlocked[s] ? n_free++ : -1;
  if (static_cast<int>(data.counts.size()) <= n_free) {
    throw DomainError("fit window holds too few bins");
  }

  const double jitter = options.jitter;
  if (!(jitter >= 0.0)) throw DomainError("jitter sigma must be >= 0");
  auto params_of = [&](const Eigen::VectorXd& x) {
    BeatModelParams p = start;
    p.G0 = 1.0;
    p.background = 0.0;
    if (index[kTauX] >= 0) p.tau_x = x(index[kTauX]);
    if (index[kTauY] >= 0) p.tau_y = x(index[kTauY]);
    if (index[kR] >= 0) p.R = x(index[kR]);
    if (index[kPhi] >= 0) p.phi = x(index[kPhi]);
    if (index[kDelta] >= 0) p.delta = x(index[kDelta]);
    return p;
  };
  const ResidualFunction residuals =
      weighted_residuals(data, [&](const Eigen::VectorXd& x) -> ModelCurve {
        const BeatModelParams shape = params_of(x);
        const double amplitude = x(0);
        const double background = x(1);
        const double t0 = index[kOffset] >= 0 ? x(index[kOffset]) : 0.0;
        const ModelCurve curve = [shape, amplitude, background, t0](double t) {
          return amplitude * g2_beats(t - t0, shape) + background;
        };
        return jitter > 0.0 ? convolve_jitter(curve, jitter, {t0}) : curve;
      });
  const FeasibleFunction feasible = [&](const Eigen::VectorXd& x) {
    const BeatModelParams p = params_of(x);
    return p.tau_x > 0.0 && p.tau_y > 0.0 && p.R >= 0.0 && p.delta > 0.0;
  };

  Eigen::VectorXd x0(n_free);
  x0(0) = start.G0 * start.G0;
  x0(1) = start.background;
  if (index[kTauX] >= 0) x0(index[kTauX]) = start.tau_x;
  if (index[kTauY] >= 0) x0(index[kTauY]) = start.tau_y;
  if (index[kR] >= 0) x0(index[kR]) = start.R;
  if (index[kPhi] >= 0) x0(index[kPhi]) = start.phi;
  if (index[kDelta] >= 0) x0(index[kDelta]) = start.delta;
  if (index[kOffset] >= 0) x0(index[kOffset]) = 0.0;

  const LmResult lm = levenberg_marquardt(residuals, x0, options.lm, feasible);

  BeatFit fit;
  fit.params = params_of(lm.params);
  fit.amplitude = lm.params(0);
  fit.params.G0 = std::sqrt(std::max(fit.amplitude, 0.0));
  fit.params.background = lm.params(1);
  fit.offset = index[kOffset] >= 0 ? lm.params(index[kOffset]) : 0.0;
  fit.chi2 = lm.chi2;
  fit.n_dof = static_cast<int>(data.counts.size()) - n_free;
  fit.chi2_reduced = lm.chi2 / fit.n_dof;
  fit.converged = lm.converged;
  fit.iterations = lm.iterations;
  if (lm.covariance.size() == 0) {
    throw DegenerateError("fit is degenerate: singular Jacobian at the solution");
  }

  const Eigen::MatrixXd& cov = lm.covariance;
  BeatModelParams s{};
  s.G0 = 0.0;
  s.tau_x = s.tau_y = s.R = s.phi = s.delta = 0.0;
  fit.amplitude_sigma = sigma_of(cov, 0);
  // Delta method for G0 = √A; near zero the amplitude sigma is the useful number.
  s.G0 = fit.params.G0 > 0.0 ? fit.amplitude_sigma / (2.0 * fit.params.G0)
                             : std::sqrt(fit.amplitude_sigma);
  s.background = sigma_of(cov, 1);
  if (index[kTauX] >= 0) s.tau_x = sigma_of(cov, index[kTauX]);
  if (index[kTauY] >= 0) s.tau_y = sigma_of(cov, index[kTauY]);
  if (index[kR] >= 0) s.R = sigma_of(cov, index[kR]);
  if (index[kPhi] >= 0) s.phi = sigma_of(cov, index[kPhi]);
  if (index[kDelta] >= 0) s.delta = sigma_of(cov, index[kDelta]);
  if (index[kOffset] >= 0) fit.offset_sigma = sigma_of(cov, index[kOffset]);
  fit.sigmas = s;
  if (!lm.converged) {
    throw ConvergenceError<BeatFit>("beat fit did not converge", fit);
  }
  return fit;
}

}  // namespace fwm
