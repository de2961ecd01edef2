// Acceptance suite: one PASS/FAIL line per criterion; exit status is nonzero
// if any criterion fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "fwm/entanglement.hpp"
#include "fwm/polstate.hpp"
#include "fwm/presets.hpp"
#include "fwm/timecorr.hpp"
#include "fwm/tomography.hpp"

using namespace fwm;
using C = std::complex<double>;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

std::pair<int, std::string> run_cli(const std::string& args) {
  const std::string cmd = std::string(FWM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

BiphotonKet predicted(const CascadeLevels& lv) { return ket_from_path(predict_path_state(lv)); }

Outcome state_prediction() {
  const auto t0 = Clock::now();
  const auto x = predict_path_state(CascadeLevels::path_x());
  const auto y = predict_path_state(CascadeLevels::path_y());
  const double elapsed = seconds_since(t0);
  // Relative sign -1 means the RL amplitude carries phase π.
  const bool ok = std::abs(x.a0 - 0.55) <= 0.005 && std::abs(x.a1 - 0.83) <= 0.005 &&
                  std::abs(y.a0 - 0.92) <= 0.005 && std::abs(y.a1 - 0.39) <= 0.005 &&
                  x.phi0 == kPi && y.phi0 == kPi && elapsed < 1.0;
  return {ok, "X=(" + fmt(x.a0, 4) + ", -" + fmt(x.a1, 4) + ") Y=(" + fmt(y.a0, 4) + ", -" +
                  fmt(y.a1, 4) + ") in " + fmt(elapsed, 3) + " s"};
}

Outcome metric_identities() {
  const double s = 1.0 / std::sqrt(2.0);
  Amplitudes4<double> bell;
  bell << 0, s, s, 0;
  const auto rho = density_from_ket(BiphotonKet(bell, Basis::circular));
  const double c_bell = concurrence(rho);
  const double e_bell = entanglement_of_formation(rho);

  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Amplitudes4<double> a;
    for (int i = 0; i < 4; ++i) a(i) = C(n(rng), n(rng));
    a.normalize();
    const double oracle = 2.0 * std::abs(a(0) * a(3) - a(1) * a(2));
    worst = std::max(worst,
                     std::abs(concurrence(density_from_ket(BiphotonKet(a, Basis::linear))) - oracle));
  }
  const bool ok = std::abs(c_bell - 1) <= 1e-10 && std::abs(e_bell - 1) <= 1e-10 && worst <= 1e-10;
  return {ok, "C(Bell)-1=" + fmt(c_bell - 1, 3) + " E(Bell)-1=" + fmt(e_bell - 1, 3) +
                  " max|C-2|ad-bc||=" + fmt(worst, 3)};
}

Outcome tomography_round_trip() {
  const auto truth_ket = predicted(CascadeLevels::path_x());
  const auto truth = density_from_ket(truth_ket);
  const auto settings = standard_settings(SettingSet::overcomplete36);
  const auto t0 = Clock::now();
  double sum = 0.0;
  double worst = 1.0;
  bool psd = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = reconstruct_mle(simulate_counts(truth, settings, 1e5, seed));
    const double f = fidelity(r.rho, truth_ket);
    sum += f;
    worst = std::min(worst, f);
    psd = psd && r.rho.min_eigenvalue() >= 0.0;
  }
  const double elapsed = seconds_since(t0);
  const double mean = sum / 20.0;
  const bool ok = mean >= 0.995 && worst >= 0.99 && psd && elapsed < 60.0;
  return {ok, "mean F=" + fmt(mean) + " min F=" + fmt(worst) + (psd ? " PSD" : " not PSD") +
                  " in " + fmt(elapsed, 3) + " s"};
}

Outcome estimator_agreement() {
  double worst = 0.0;
  for (const auto& lv : {CascadeLevels::path_x(), CascadeLevels::path_y()}) {
    const auto records = expected_counts(density_from_ket(predicted(lv)), standard_settings(), 1e5);
    const auto lin = reconstruct_linear(records);
    const auto mle = reconstruct_mle(records);
    worst = std::max(worst, trace_distance<double>(lin.matrix, mle.rho.matrix()));
  }
  return {worst <= 1e-5, "max trace distance=" + fmt(worst, 3)};
}

Outcome uncertainty_scaling() {
  // Counts ×100 from the same source; the concurrence spread should drop ≈10×.
  const auto truth = density_from_ket(predicted(CascadeLevels::path_x()));
  const auto settings = standard_settings();
  const auto low = simulate_counts(truth, settings, 1e3, 5);
  auto high = simulate_counts(truth, settings, 1e5, 5);
  const auto a = resample_uncertainties(low, 100, 17);
  const auto b = resample_uncertainties(high, 100, 17);
  const double ratio = a.concurrence.stddev / b.concurrence.stddev;
  return {ratio >= 5.0 && ratio <= 15.0, "stddev(C) " + fmt(a.concurrence.stddev, 4) + " -> " +
                                             fmt(b.concurrence.stddev, 4) +
                                             ", ratio=" + fmt(ratio, 4)};
}

Outcome decay_fit_recovery() {
  std::ostringstream detail;
  bool ok = true;
  for (const auto& [name, quoted] : {std::pair<const char*, double>{"fig2x", 0.1},
                                     std::pair<const char*, double>{"fig2y", 0.2}}) {
    const auto preset = g2_preset(name);
    const auto paper_stats = std::get<SinglePathParams>(preset.model);

    // Recovery at a peak of 10⁴ counts/bin.
    SinglePathParams truth = paper_stats;
    truth.G0 = 1e4;
    const auto h =
        simulate_histogram(Model{truth}, preset.bin_width, preset.t_begin, preset.t_end, 2024);
    const double peak = *std::max_element(h.counts.begin(), h.counts.end());
    const auto fit = fit_single(h, {0.5 * peak, 2.0, 8.0, 1.0});
    const double err_d = std::abs(fit.params.tau_d / truth.tau_d - 1);
    const double err_r = std::abs(fit.params.tau_r / truth.tau_r - 1);

    // Reported 1σ at statistics like the published histograms (peak ≈ 1.2-1.5e3).
    const auto hp = simulate_histogram(preset.model, preset.bin_width, preset.t_begin,
                                       preset.t_end, 2024);
    const double peak_p = *std::max_element(hp.counts.begin(), hp.counts.end());
    const auto fit_p = fit_single(hp, {0.5 * peak_p, 2.0, 8.0, 1.0});
    const double order = fit_p.sigmas.tau_d / quoted;

    const bool this_ok = peak >= 1e3 && peak_p >= 1e3 && err_d <= 0.02 && err_r <= 0.02 &&
                         order >= 1.0 / 3.0 && order <= 3.0;
    ok = ok && this_ok;
    detail << name << ": tau_d=" << fmt(fit.params.tau_d, 5) << " tau_r="
           << fmt(fit.params.tau_r, 5) << " (truth " << truth.tau_d << ", " << truth.tau_r
           << "); 1σ(tau_d) at peak " << fmt(peak_p, 4) << " = " << fmt(fit_p.sigmas.tau_d, 2)
           << " vs quoted " << quoted << ". ";
  }
  return {ok, detail.str()};
}

Outcome beat_model_identity() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    BeatModelParams p;
    p.G0 = 0.1 + 20 * u(rng);
    p.tau_x = 1 + 20 * u(rng);
    p.tau_y = 1 + 20 * u(rng);
    p.R = 3 * u(rng);
    p.phi = 2 * kPi * (u(rng) - 0.5);
    p.delta = 0.1 + 3 * u(rng);
    p.background = 5 * u(rng);
    const double dt = -5 + 80 * u(rng);
    const auto [cx, cy] = path_amplitudes(dt, p);
    const double scale = std::max(1.0, p.G0 * p.G0 * (1 + p.R) * (1 + p.R) + p.background);
    worst = std::max(worst, std::abs(g2_beats(dt, p) - (std::norm(cx + cy) + p.background)) / scale);
  }

  const auto preset = g2_preset("fig3");
  const auto truth = std::get<BeatModelParams>(preset.model);
  const auto h = simulate_histogram(preset.model, preset.bin_width, preset.t_begin, preset.t_end, 7);
  BeatModelParams start = truth;
  start.delta = 2 * kPi / 3.6;
  BeatFitOptions opts;
  opts.free_delta = true;
  const auto fit = fit_beats(h, start, opts);
  const double period = 2 * kPi / fit.params.delta;
  const double expected = 2 * kPi / kHyperfineBeatFrequency;
  const bool ok = worst <= 1e-12 && std::abs(period - expected) <= preset.bin_width;
  return {ok, "max relative identity error=" + fmt(worst, 3) + " fitted period=" + fmt(period, 5) +
                  " ns (2π/δ=" + fmt(expected, 5) + " ns)"};
}

Outcome beat_regimes() {
  const auto a = std::get<BeatModelParams>(g2_preset("fig4a").model);
  const auto b = std::get<BeatModelParams>(g2_preset("fig4b").model);
  const auto c = std::get<BeatModelParams>(g2_preset("fig4c").model);
  const double contrast = beat_contrast(a);
  // Cosine term just after zero delay.
  const double eps = 1e-6;
  const double cos_b = 2 * b.R * std::cos(b.delta * eps + b.phi);
  const double cos_c = 2 * c.R * std::cos(c.delta * eps + c.phi);
  const bool ok = contrast <= 0.06 && cos_b * cos_c < 0.0;
  return {ok, "contrast(a)=" + fmt(contrast, 4) + " cos-term b=" + fmt(cos_b, 4) +
                  " c=" + fmt(cos_c, 4)};
}

Outcome table_uncertainties() {
  // A few thousand coincidences per setting, as in a typical two-photon
  // tomography run, with a slightly mixed source.
  const auto pure = density_from_ket(predicted(CascadeLevels::path_x()));
  const auto truth = DensityMatrix4::normalized(
      0.93 * pure.matrix() + 0.07 * Matrix4c<double>::Identity() / 4.0, pure.basis());
  const auto records = simulate_counts(truth, standard_settings(), 2000, 31);
  const auto m = resample_uncertainties(records, 100, 32);
  const double lo = 0.01 - 0.05;
  const double hi = 0.03 + 0.05;
  auto inside = [&](double s) { return s >= std::max(lo, 0.0) && s <= hi; };
  const bool ok = inside(m.purity.stddev) && inside(m.concurrence.stddev) && inside(m.eof.stddev);
  return {ok, "purity " + fmt(m.purity.mean, 3) + "±" + fmt(m.purity.stddev, 2) + " C " +
                  fmt(m.concurrence.mean, 3) + "±" + fmt(m.concurrence.stddev, 2) + " E " +
                  fmt(m.eof.mean, 3) + "±" + fmt(m.eof.stddev, 2)};
}

Outcome determinism() {
  const std::filesystem::path tmp =
      std::filesystem::temp_directory_path() / "fwm_acceptance_determinism";
  std::filesystem::create_directories(tmp);
  const std::string dir = tmp.string();
  const std::string counts = dir + "/counts.csv";
  const std::string hist = dir + "/hist.csv";
  const std::vector<std::string> commands = {
      "--seed 3 predict --path X",
      "--seed 3 simulate-tomo --path X --n 1e4 -o " + counts,
      "--seed 3 reconstruct --counts " + counts + " --resamples 8 --target X",
      "--seed 3 reconstruct --counts " + counts + " --method linear",
      "--seed 3 resample --counts " + counts + " --n 8",
      "--seed 3 simulate-g2 --preset fig3 --jitter 0.2 -o " + hist,
      "--seed 3 fit-g2 --preset fig3 --histogram " + hist + " --free-R --free-phi",
      "--seed 3 beat-params --target-R 0.5 --target-phi 3.141592653589793",
  };
  int checked = 0;
  for (const auto& args : commands) {
    const auto a = run_cli(args);
    const auto b = run_cli(args);
    if (a.first != 0 || a != b) {
      std::filesystem::remove_all(tmp);
      return {false, "differs or fails: " + args};
    }
    if (args.find("-o ") != std::string::npos) {
      // Files written with -o: regenerate and compare bytes.
      const std::string file = args.substr(args.rfind(' ') + 1);
      std::ifstream f1(file, std::ios::binary);
      std::stringstream s1;
      s1 << f1.rdbuf();
      run_cli(args);
      std::ifstream f2(file, std::ios::binary);
      std::stringstream s2;
      s2 << f2.rdbuf();
      if (s1.str() != s2.str() || s1.str().empty()) {
        std::filesystem::remove_all(tmp);
        return {false, "file differs: " + args};
      }
    }
    ++checked;
  }
  std::filesystem::remove_all(tmp);
  return {true, std::to_string(checked) + " commands byte-identical on re-run"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"state prediction", state_prediction},
      {"metric identities", metric_identities},
      {"tomography round trip", tomography_round_trip},
      {"estimator agreement", estimator_agreement},
      {"uncertainty scaling", uncertainty_scaling},
      {"decay-fit recovery", decay_fit_recovery},
      {"beat model identity", beat_model_identity},
      {"beat regimes", beat_regimes},
      {"metric uncertainty magnitudes", table_uncertainties},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (k + 1) << ". " << criteria[k].first
              << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
