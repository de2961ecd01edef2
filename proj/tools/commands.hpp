#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fwm::cli {

inline constexpr const char* kToolName = "fwm-cascade";
inline constexpr const char* kToolVersion = "1.0.0";

/// Exit codes are part of the public interface.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInvalidInput = 2,
  kNumericalFailure = 3,
};

struct Context {
  std::uint64_t seed = 1;
  std::string command_line;
  /// Empty means stdout.
  std::string output;
};

struct PredictOptions {
  std::string path;
  std::string levels;
};

struct SimulateTomoOptions {
  std::string path;
  std::string state_file;
  double n_per_setting = 1e5;
  double exposure = 1.0;
  std::string settings = "overcomplete36";
};

struct ReconstructOptions {
  std::string counts_file;
  std::string method = "mle";
  double background = 0.0;
  int resamples = 0;
  std::string target;
};

struct ResampleOptions {
  std::string counts_file;
  int n_resamples = 100;
  double background = 0.0;
  std::string target;
};

struct ModelOptions {
  std::string preset;
  std::string model = "single";
  std::optional<double> G0, tau_r, tau_d, tau_x, tau_y, R, phi, delta, background;
};

struct SimulateG2Options {
  ModelOptions model;
  std::optional<double> bin_width, t_begin, t_end;
  double jitter = 0.0;
};

struct FitG2Options {
  ModelOptions model;
  std::string histogram_file;
  bool free_tau_x = false;
  bool free_tau_y = false;
  bool free_R = false;
  bool free_phi = false;
  bool free_delta = false;
  bool fit_offset = false;
  double jitter = 0.0;
  std::optional<double> t_min, t_max;
};

struct BeatParamsOptions {
  std::string ket_x_file;
  std::string ket_y_file;
  std::string signal = "L";
  std::string idler;
  std::optional<double> target_R;
  std::optional<double> target_phi;
};

int run_predict(const Context& ctx, const PredictOptions& opt);
int run_simulate_tomo(const Context& ctx, const SimulateTomoOptions& opt);
int run_reconstruct(const Context& ctx, const ReconstructOptions& opt);
int run_resample(const Context& ctx, const ResampleOptions& opt);
int run_simulate_g2(const Context& ctx, const SimulateG2Options& opt);
int run_fit_g2(const Context& ctx, const FitG2Options& opt);
int run_beat_params(const Context& ctx, const BeatParamsOptions& opt);

}  // namespace fwm::cli
