#pragma once

// Two-photon polarization tomography: forward simulation of projective
// coincidence counts, linear inversion, and maximum-likelihood estimation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwm/entanglement.hpp"
#include "fwm/error.hpp"
#include "fwm/polstate.hpp"

namespace fwm {

struct MeasurementSetting {
  Projector proj_s;
  Projector proj_i;
  std::string label;

  /// proj_s ⊗ proj_i in the {H, V} basis.
  Amplitudes4<double> vector() const;
};

struct CountsRecord {
  MeasurementSetting setting;
  /// Non-negative; integral unless a background was subtracted.
  double counts = 0.0;
  /// Relative acquisition weight.
  double exposure = 1.0;
};

enum class SettingSet { minimal16, overcomplete36 };

/// minimal16: the usual 16 two-qubit settings built from H, V, D, R;
/// overcomplete36: every pair from {H, V, D, A, L, R}.
std::vector<MeasurementSetting> standard_settings(SettingSet kind = SettingSet::overcomplete36);

/// Counts ~ Poisson(n_per_setting × exposure × <p_s p_i|rho|p_s p_i>).
/// Record k draws from its own generator seeded by (seed, k).
std::vector<CountsRecord> simulate_counts(const DensityMatrix4& rho,
                                          std::span<const MeasurementSetting> settings,
                                          double n_per_setting, std::uint64_t seed,
                                          double exposure = 1.0);

/// Noise-free expected counts (not rounded).
std::vector<CountsRecord> expected_counts(const DensityMatrix4& rho,
                                          std::span<const MeasurementSetting> settings,
                                          double n_per_setting, double exposure = 1.0);

/// Subtracts a flat accidental level from every record, clamped at zero.
std::vector<CountsRecord> subtract_background(std::span<const CountsRecord> records,
                                              double level);

struct LinearInversion {
  /// Hermitian, unit trace, {H, V} basis; may be slightly non-positive.
  Matrix4c<double> matrix;
  double min_eigenvalue;
  /// min_eigenvalue below -1e-9: the raw estimate is unphysical.
  bool negative;
  /// min_eigenvalue below -1e-2: worse than counting noise usually explains.
  bool strongly_negative;
};

/// Least-squares inversion of rates n/exposure onto the 16 Pauli products.
/// Throws SpanError if the settings are not informationally complete and
/// DegenerateError if every count is zero.
LinearInversion reconstruct_linear(std::span<const CountsRecord> records);

/// Closest physical state in the eigenvalue sense: negative weight is removed
/// and shared out over the remaining eigenvalues (Smolin, Gambetta, Smith).
DensityMatrix4 project_to_physical(const Matrix4c<double>& hermitian);

struct MleOptions {
  int max_iterations = 10000;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-10;
  /// Weight of I/4 mixed into the linear-inversion seed so that the
  /// Cholesky factor starts full rank.
  double seed_mixing = 1e-3;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ResampledMetrics {
  MetricSummary purity;
  MetricSummary concurrence;
  MetricSummary eof;
  std::optional<MetricSummary> fidelity;
  int n_resamples = 0;
};

struct TomographyResult {
  DensityMatrix4 rho;
  /// Σ (n ln μ - μ) with μ the expected counts at the best-fit total rate.
  double log_likelihood;
  int iterations;
  bool converged;
  std::optional<ResampledMetrics> resampled_metrics;
};

/// Poisson log-likelihood of the records under rho, with the overall rate
/// set to its maximum-likelihood value. Constant ln n! terms are dropped.
double poisson_log_likelihood(const DensityMatrix4& rho, std::span<const CountsRecord> records);

/// Maximum-likelihood state with rho = T†T / Tr[T†T], T lower triangular
/// (16 real parameters), ascended by BFGS from the linear-inversion seed.
/// Throws ConvergenceError<TomographyResult> past max_iterations and
/// DegenerateError for all-zero data.
TomographyResult reconstruct_mle(std::span<const CountsRecord> records,
                                 const MleOptions& options = {});

/// Parametric bootstrap: each resample redraws every count from
/// Poisson(observed) with its own seed and re-runs the MLE. Fidelity is
/// reported only when a target is given.
ResampledMetrics resample_uncertainties(std::span<const CountsRecord> records,
                                        std::span<const std::uint64_t> seeds,
                                        const std::optional<BiphotonKet>& target = std::nullopt,
                                        const MleOptions& options = {});

/// Seeds are derived from (seed, resample index). Requires n_resamples >= 2.
ResampledMetrics resample_uncertainties(std::span<const CountsRecord> records, int n_resamples,
                                        std::uint64_t seed,
                                        const std::optional<BiphotonKet>& target = std::nullopt,
                                        const MleOptions& options = {});

/// Deterministic 64-bit sub-seed for work item `index` of a seeded job.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace fwm
