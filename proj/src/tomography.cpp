#include "fwm/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace fwm {

namespace {

using Vec4c = Amplitudes4<double>;
using Mat4c = Matrix4c<double>;

constexpr int kParams = 16;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double poisson_draw(std::mt19937_64& gen, double mean) {
  if (!(mean > 0.0)) return 0.0;
  std::poisson_distribution<long long> dist(mean);
  return static_cast<double>(dist(gen));
}

std::array<Matrix2c<double>, 4> pauli() {
  using C = std::complex<double>;
  std::array<Matrix2c<double>, 4> s;
  s[0] << C(1), C(0), C(0), C(1);
  s[1] << C(0), C(1), C(1), C(0);
  s[2] << C(0), C(0, -1), C(0, 1), C(0);
  s[3] << C(1), C(0), C(0), C(-1);
  return s;
}

double total_counts(std::span<const CountsRecord> records) {
  double n = 0.0;
  for (const CountsRecord& r : records) {
    if (r.counts < 0.0 || !std::isfinite(r.counts)) throw DomainError("counts must be >= 0");
    if (!(r.exposure > 0.0)) throw DomainError("exposure must be > 0");
    n += r.counts;
  }
  return n;
}

// Lower-triangular T from the 16 real parameters: 4 real diagonal entries,
// then (re, im) of each strictly-lower entry in row-major order.
Mat4c unpack(const Eigen::VectorXd& theta) {
  Mat4c t = Mat4c::Zero();
  int k = 0;
  for (int i = 0; i < 4; ++i) t(i, i) = theta(k++);
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      t(i, j) = {theta(k), theta(k + 1)};
      k += 2;
    }
  }
  return t;
}

Eigen::VectorXd pack(const Mat4c& t) {
  Eigen::VectorXd theta(kParams);
  int k = 0;
  for (int i = 0; i < 4; ++i) theta(k++) = t(i, i).real();
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      theta(k++) = t(i, j).real();
      theta(k++) = t(i, j).imag();
    }
  }
  return theta;
}

// Lower-triangular T with T†T = rho, via Cholesky of the index-reversed matrix.
Mat4c cholesky_factor(const Mat4c& rho) {
  Eigen::Matrix4d reverse = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i) reverse(i, 3 - i) = 1.0;
  const Mat4c flipped = reverse * rho * reverse;
  Eigen::LLT<Mat4c> llt(flipped);
  if (llt.info() != Eigen::Success) throw DomainError("seed state is not positive definite");
  const Mat4c l = llt.matrixL();
  return reverse * l.adjoint() * reverse;
}

DensityMatrix4 state_from_factor(const Mat4c& t) {
  return DensityMatrix4::normalized(t.adjoint() * t, Basis::linear);
}

// Negative profile log-likelihood per count, as a function of T.
class LikelihoodObjective {
 public:
  explicit LikelihoodObjective(std::span<const CountsRecord> records)
      : n_total_(total_counts(records)) {
    for (const CountsRecord& r : records) {
      vectors_.push_back(r.setting.vector());
      counts_.push_back(r.counts);
      exposures_.push_back(r.exposure);
    }
  }

  double n_total() const { return n_total_; }

  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient) const {
    const Mat4c t = unpack(theta);
    const std::size_t m = vectors_.size();
    std::vector<double> q(m);
    double weighted = 0.0;
    double log_sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      q[k] = (t * vectors_[k]).squaredNorm();
      weighted += exposures_[k] * q[k];
      if (counts_[k] > 0.0) {
        if (!(q[k] > 0.0)) return std::numeric_limits<double>::infinity();
        log_sum += counts_[k] * std::log(q[k]);
      }
    }
    if (!(weighted > 0.0)) return std::numeric_limits<double>::infinity();
    const double value = -(log_sum - n_total_ * std::log(weighted)) / n_total_;

    if (gradient != nullptr) {
      Mat4c weights = Mat4c::Zero();
      for (std::size_t k = 0; k < m; ++k) {
        double c = n_total_ * exposures_[k] / weighted;
        if (counts_[k] > 0.0) c -= counts_[k] / q[k];
        weights += (c / n_total_) * (vectors_[k] * vectors_[k].adjoint());
      }
      const Mat4c g = 2.0 * t * weights;
      Eigen::VectorXd out(kParams);
      int k = 0;
      for (int i = 0; i < 4; ++i) out(k++) = g(i, i).real();
      for (int i = 1; i < 4; ++i) {
        for (int j = 0; j < i; ++j) {
          out(k++) = g(i, j).real();
          out(k++) = g(i, j).imag();
        }
      }
      *gradient = out;
    }
    return value;
  }

 private:
  double n_total_;
  std::vector<Vec4c> vectors_;
  std::vector<double> counts_;
  std::vector<double> exposures_;
};

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Vec4c MeasurementSetting::vector() const {
  return Eigen::kroneckerProduct(proj_s.linear(), proj_i.linear());
}

std::vector<MeasurementSetting> standard_settings(SettingSet kind) {
  std::vector<MeasurementSetting> out;
  if (kind == SettingSet::overcomplete36) {
    constexpr std::array<const char*, 6> names{"H", "V", "D", "A", "L", "R"};
    for (const char* s : names) {
      for (const char* i : names) {
        out.push_back({*Projector::named(s), *Projector::named(i), std::string(s) + i});
      }
    }
    return out;
  }
  constexpr std::array<const char*, 16> pairs{"HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
                                              "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL"};
  for (const char* p : pairs) {
    const std::string label(p);
    out.push_back({*Projector::named(label.substr(0, 1)), *Projector::named(label.substr(1, 1)),
                   label});
  }
  return out;
}

std::vector<CountsRecord> expected_counts(const DensityMatrix4& rho,
                                          std::span<const MeasurementSetting> settings,
                                          double n_per_setting, double exposure) {
  if (!(n_per_setting > 0.0)) throw DomainError("n_per_setting must be > 0");
  if (!(exposure > 0.0)) throw DomainError("exposure must be > 0");
  const Mat4c m = rho.matrix_in(Basis::linear);
  std::vector<CountsRecord> out;
  out.reserve(settings.size());
  for (const MeasurementSetting& s : settings) {
    const Vec4c v = s.vector();
    const double p = std::max(0.0, v.dot(m * v).real());
    out.push_back({s, n_per_setting * exposure * p, exposure});
  }
  return out;
}

std::vector<CountsRecord> simulate_counts(const DensityMatrix4& rho,
                                          std::span<const MeasurementSetting> settings,
                                          double n_per_setting, std::uint64_t seed,
                                          double exposure) {
  std::vector<CountsRecord> out = expected_counts(rho, settings, n_per_setting, exposure);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::mt19937_64 gen(derive_seed(seed, k));
    out[k].counts = poisson_draw(gen, out[k].counts);
  }
  return out;
}

std::vector<CountsRecord> subtract_background(std::span<const CountsRecord> records,
                                              double level) {
  if (level < 0.0) throw DomainError("background level must be >= 0");
  std::vector<CountsRecord> out(records.begin(), records.end());
  for (CountsRecord& r : out) r.counts = std::max(0.0, r.counts - level * r.exposure);
  return out;
}

LinearInversion reconstruct_linear(std::span<const CountsRecord> records) {
  if (total_counts(records) <= 0.0) throw DegenerateError("all counts are zero");
  const auto sigma = pauli();
  std::array<Mat4c, 16> basis;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) basis[4 * a + b] = Eigen::kroneckerProduct(sigma[a], sigma[b]);
  }

  const auto m = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd design(m, 16);
  Eigen::VectorXd rates(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const CountsRecord& r = records[static_cast<std::size_t>(k)];
    const Vec4c v = r.setting.vector();
    for (int j = 0; j < 16; ++j) design(k, j) = v.dot(basis[j] * v).real();
    rates(k) = r.counts / r.exposure;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 16) throw SpanError("measurement settings do not span the operator space");
  const Eigen::VectorXd coeffs = qr.solve(rates);

  Mat4c x = Mat4c::Zero();
  for (int j = 0; j < 16; ++j) x += coeffs(j) * basis[j];
  x = ((x + x.adjoint()) / 2.0).eval();
  const double tr = x.trace().real();
  if (!(tr > 0.0)) throw DegenerateError("linear inversion produced non-positive trace");
  x /= tr;

  LinearInversion out;
  out.matrix = x;
  out.min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Mat4c>(x, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  out.negative = out.min_eigenvalue < DensityMatrix4::kEigenvalueFloor;
  out.strongly_negative = out.min_eigenvalue < -1e-2;
  return out;
}

DensityMatrix4 project_to_physical(const Matrix4c<double>& hermitian) {
  const Mat4c h = (hermitian + hermitian.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat4c> eig(h);
  Eigen::Vector4d mu = eig.eigenvalues();  // ascending
  const double tr = mu.sum();
  if (!(tr > 0.0)) throw DegenerateError("cannot project a non-positive-trace matrix");
  mu /= tr;

  // Zero the most negative eigenvalues while spreading their weight evenly
  // over the rest, until the remainder is non-negative.
  double carried = 0.0;
  int first_kept = 0;
  for (; first_kept < 4; ++first_kept) {
    const int remaining = 4 - first_kept;
    if (mu(first_kept) + carried / remaining >= 0.0) break;
    carried += mu(first_kept);
    mu(first_kept) = 0.0;
  }
  const int remaining = 4 - first_kept;
  for (int k = first_kept; k < 4; ++k) mu(k) += carried / remaining;

  const Mat4c rho = eig.eigenvectors() * mu.cast<std::complex<double>>().asDiagonal() *
                    eig.eigenvectors().adjoint();
  return DensityMatrix4::normalized(rho, Basis::linear);
}

double poisson_log_likelihood(const DensityMatrix4& rho, std::span<const CountsRecord> records) {
  const double n_total = total_counts(records);
  const Mat4c m = rho.matrix_in(Basis::linear);
  std::vector<double> p;
  double weighted = 0.0;
  for (const CountsRecord& r : records) {
    const Vec4c v = r.setting.vector();
    p.push_back(std::max(0.0, v.dot(m * v).real()));
    weighted += r.exposure * p.back();
  }
  if (!(weighted > 0.0)) return -std::numeric_limits<double>::infinity();
  const double rate = n_total / weighted;
  double ll = 0.0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const double mu = rate * records[k].exposure * p[k];
    if (records[k].counts > 0.0) {
      if (!(mu > 0.0)) return -std::numeric_limits<double>::infinity();
      ll += records[k].counts * std::log(mu);
    }
    ll -= mu;
  }
  return ll;
}

TomographyResult reconstruct_mle(std::span<const CountsRecord> records, const MleOptions& options) {
  if (records.size() < 16) throw SpanError("at least 16 measurement records are required");
  const LikelihoodObjective objective(records);
  if (objective.n_total() <= 0.0) throw DegenerateError("all counts are zero");

  const DensityMatrix4 linear_seed = project_to_physical(reconstruct_linear(records).matrix);
  const Mat4c seed = (1.0 - options.seed_mixing) * linear_seed.matrix() +
                     options.seed_mixing * Mat4c::Identity() / 4.0;

  Eigen::VectorXd x = pack(cholesky_factor(seed));
  Eigen::VectorXd g(kParams);
  double f = objective(x, &g);
  Eigen::MatrixXd inverse_hessian = Eigen::MatrixXd::Identity(kParams, kParams);
  bool scaled = false;

  auto result_at = [&](const Eigen::VectorXd& theta, int iterations, bool converged) {
    const DensityMatrix4 rho = state_from_factor(unpack(theta));
    return TomographyResult{rho, poisson_log_likelihood(rho, records), iterations, converged,
                            std::nullopt};
  };

  for (int it = 0; it < options.max_iterations; ++it) {
    if (g.cwiseAbs().maxCoeff() < options.gradient_tolerance) return result_at(x, it, true);

    Eigen::VectorXd direction = -inverse_hessian * g;
    double slope = g.dot(direction);
    if (!(slope < 0.0)) {
      inverse_hessian.setIdentity();
      direction = -g;
      slope = -g.squaredNorm();
    }

    // Backtracking (Armijo) line search.
    double step = 1.0;
    Eigen::VectorXd trial;
    Eigen::VectorXd g_trial(kParams);
    double f_trial = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int attempt = 0; attempt < 80; ++attempt) {
      trial = x + step * direction;
      f_trial = objective(trial, &g_trial);
      if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return result_at(x, it + 1, true);

    const Eigen::VectorXd s = trial - x;
    const Eigen::VectorXd y = g_trial - g;
    x = trial;
    f = f_trial;
    g = g_trial;
    if (s.cwiseAbs().maxCoeff() < options.step_tolerance) return result_at(x, it + 1, true);

    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        inverse_hessian *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho_k = 1.0 / sy;
      const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(kParams, kParams);
      const Eigen::MatrixXd left = identity - rho_k * s * y.transpose();
      inverse_hessian = left * inverse_hessian * left.transpose() + rho_k * s * s.transpose();
    }
  }
  throw ConvergenceError<TomographyResult>(
      "maximum-likelihood ascent did not converge within " +
          std::to_string(options.max_iterations) + " iterations",
      result_at(x, options.max_iterations, false));
}

ResampledMetrics resample_uncertainties(std::span<const CountsRecord> records,
                                        std::span<const std::uint64_t> seeds,
                                        const std::optional<BiphotonKet>& target,
                                        const MleOptions& options) {
  if (seeds.size() < 2) throw DomainError("at least two resamples are required");
  const std::size_t n = seeds.size();
  std::vector<MetricReport> reports(n);

  auto run = [&](std::size_t b) {
    std::mt19937_64 gen(seeds[b]);
    std::vector<CountsRecord> drawn(records.begin(), records.end());
    for (CountsRecord& r : drawn) r.counts = poisson_draw(gen, r.counts);
    reports[b] = metrics(reconstruct_mle(drawn, options).rho, target);
  };

  // Each resample owns its slot and its seed, so the schedule does not matter.
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n);
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t b = w; b < n; b += workers) run(b);
    }));
  }
  for (auto& j : jobs) j.get();

  std::vector<double> purity, conc, eof, fid;
  for (const MetricReport& r : reports) {
    purity.push_back(r.purity);
    conc.push_back(r.concurrence);
    eof.push_back(r.eof);
    if (r.fidelity) fid.push_back(*r.fidelity);
  }
  ResampledMetrics out;
  out.purity = summarize(purity);
  out.concurrence = summarize(conc);
  out.eof = summarize(eof);
  if (target) out.fidelity = summarize(fid);
  out.n_resamples = static_cast<int>(n);
  return out;
}

ResampledMetrics resample_uncertainties(std::span<const CountsRecord> records, int n_resamples,
                                        std::uint64_t seed,
                                        const std::optional<BiphotonKet>& target,
                                        const MleOptions& options) {
  if (n_resamples < 2) throw DomainError("at least two resamples are required");
  std::vector<std::uint64_t> seeds;
  for (int b = 0; b < n_resamples; ++b) {
    seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(b)));
  }
  return resample_uncertainties(records, seeds, target, options);
}

}  // namespace fwm
