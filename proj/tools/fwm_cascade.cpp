// fwm-cascade: state prediction, tomography and coincidence-histogram
// pipelines for a cascade four-wave-mixing photon-pair source.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fwm/error.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("FWM_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric FWM_SEED\n";
    }
  }
  return 1;
}

void add_model_options(CLI::App* cmd, fwm::cli::ModelOptions& m) {
  cmd->add_option("--preset", m.preset, "fig2x, fig2y, fig3, fig4a, fig4b or fig4c");
  cmd->add_option("--model", m.model, "single or beats (ignored with --preset)")
      ->check(CLI::IsMember({"single", "beats"}));
  cmd->add_option("--G0", m.G0, "amplitude (single: peak counts/bin; beats: sqrt scale)");
  cmd->add_option("--tau-r", m.tau_r, "rise time [ns]");
  cmd->add_option("--tau-d", m.tau_d, "decay time [ns]");
  cmd->add_option("--tau-x", m.tau_x, "path X decay time [ns]");
  cmd->add_option("--tau-y", m.tau_y, "path Y decay time [ns]");
  cmd->add_option("--R", m.R, "relative amplitude of path Y");
  cmd->add_option("--phi", m.phi, "relative phase [rad]");
  cmd->add_option("--delta", m.delta, "beat angular frequency [rad/ns]");
  cmd->add_option("--background", m.background, "flat accidental level [counts/bin]");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fwm::cli;

  CLI::App app{"Cascade four-wave-mixing photon pairs: states, tomography, time correlations"};
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  Context ctx;
  ctx.seed = default_seed();
  app.add_option("--seed", ctx.seed, "RNG seed (default: $FWM_SEED or 1)");
  app.add_option("-o,--output", ctx.output, "output file (default: stdout)");

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "predict the biphoton state of a decay path");
  auto* path_opt = predict_cmd->add_option("--path", predict.path, "X or Y");
  auto* levels_opt = predict_cmd->add_option("--levels", predict.levels, "F_g,F_b,F_e,F_d");
  path_opt->excludes(levels_opt);

  SimulateTomoOptions sim_tomo;
  auto* sim_tomo_cmd = app.add_subcommand("simulate-tomo", "simulate tomography counts");
  sim_tomo_cmd->add_option("--path", sim_tomo.path, "predicted state X or Y");
  sim_tomo_cmd->add_option("--state", sim_tomo.state_file, "JSON ket/density matrix file");
  sim_tomo_cmd->add_option("--n", sim_tomo.n_per_setting, "mean counts per setting")
      ->capture_default_str();
  sim_tomo_cmd->add_option("--exposure", sim_tomo.exposure, "exposure per setting")
      ->capture_default_str();
  sim_tomo_cmd->add_option("--settings", sim_tomo.settings, "overcomplete36 or minimal16")
      ->capture_default_str();

  ReconstructOptions recon;
  auto* recon_cmd = app.add_subcommand("reconstruct", "reconstruct a density matrix from counts");
  recon_cmd->add_option("--counts", recon.counts_file, "counts CSV")->required();
  recon_cmd->add_option("--method", recon.method, "mle or linear")
      ->check(CLI::IsMember({"mle", "linear"}))
      ->capture_default_str();
  recon_cmd->add_option("--background", recon.background, "flat background per setting")
      ->capture_default_str();
  recon_cmd->add_option("--resamples", recon.resamples, "bootstrap resamples (mle only)")
      ->capture_default_str();
  recon_cmd->add_option("--target", recon.target, "fidelity target: X, Y or ket JSON");

  ResampleOptions resample;
  auto* resample_cmd = app.add_subcommand("resample", "bootstrap uncertainties of the metrics");
  resample_cmd->add_option("--counts", resample.counts_file, "counts CSV")->required();
  resample_cmd->add_option("--n", resample.n_resamples, "number of resamples")
      ->capture_default_str();
  resample_cmd->add_option("--background", resample.background, "flat background per setting")
      ->capture_default_str();
  resample_cmd->add_option("--target", resample.target, "fidelity target: X, Y or ket JSON");

  SimulateG2Options sim_g2;
  auto* sim_g2_cmd = app.add_subcommand("simulate-g2", "simulate a coincidence histogram");
  add_model_options(sim_g2_cmd, sim_g2.model);
  sim_g2_cmd->add_option("--bin-width", sim_g2.bin_width, "bin width [ns]");
  sim_g2_cmd->add_option("--t-begin", sim_g2.t_begin, "first bin start [ns]");
  sim_g2_cmd->add_option("--t-end", sim_g2.t_end, "range end [ns]");
  sim_g2_cmd->add_option("--jitter", sim_g2.jitter, "Gaussian detector jitter sigma [ns]")
      ->capture_default_str();

  FitG2Options fit;
  auto* fit_cmd = app.add_subcommand("fit-g2", "fit a coincidence histogram");
  add_model_options(fit_cmd, fit.model);
  fit_cmd->add_option("--histogram", fit.histogram_file, "histogram CSV")->required();
  fit_cmd->add_flag("--free-tau-x", fit.free_tau_x, "also fit tau_x (beats)");
  fit_cmd->add_flag("--free-tau-y", fit.free_tau_y, "also fit tau_y (beats)");
  fit_cmd->add_flag("--free-R", fit.free_R, "also fit R (beats)");
  fit_cmd->add_flag("--free-phi", fit.free_phi, "also fit phi (beats)");
  fit_cmd->add_flag("--free-delta", fit.free_delta, "also fit delta (beats)");
  fit_cmd->add_flag("--fit-offset", fit.fit_offset, "fit a time offset of the delay axis");
  fit_cmd->add_option("--jitter", fit.jitter, "known Gaussian jitter sigma folded into the model [ns]")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--t-min", fit.t_min, "fit window start [ns]");
  fit_cmd->add_option("--t-max", fit.t_max, "fit window end [ns]");

  BeatParamsOptions beat;
  auto* beat_cmd = app.add_subcommand("beat-params", "beat amplitude and phase from projections");
  beat_cmd->add_option("--ket-x", beat.ket_x_file, "path X ket (default: predicted)");
  beat_cmd->add_option("--ket-y", beat.ket_y_file, "path Y ket (default: predicted)");
  beat_cmd->add_option("--signal", beat.signal, "H,V,D,A,L,R or h_re,h_im,v_re,v_im")
      ->capture_default_str();
  beat_cmd->add_option("--idler", beat.idler, "as --signal (default: fig3-idler)");
  beat_cmd->add_option("--target-R", beat.target_R, "search projectors for this R");
  beat_cmd->add_option("--target-phi", beat.target_phi, "search projectors for this phi");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  for (int i = 0; i < argc; ++i) {
    if (i > 0) ctx.command_line += ' ';
    ctx.command_line += argv[i];
  }
  // argv[0] varies with how the tool is invoked; keep the recorded line stable.
  ctx.command_line.replace(0, std::string(argv[0]).size(), kToolName);

  try {
    if (*predict_cmd) {
      if (predict.path.empty() && predict.levels.empty()) {
        std::cerr << "predict: one of --path or --levels is required\n";
        return kUsage;
      }
      return run_predict(ctx, predict);
    }
    if (*sim_tomo_cmd) return run_simulate_tomo(ctx, sim_tomo);
    if (*recon_cmd) return run_reconstruct(ctx, recon);
    if (*resample_cmd) return run_resample(ctx, resample);
    if (*sim_g2_cmd) return run_simulate_g2(ctx, sim_g2);
    if (*fit_cmd) return run_fit_g2(ctx, fit);
    if (*beat_cmd) return run_beat_params(ctx, beat);
  } catch (const fwm::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const fwm::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const fwm::DegenerateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const fwm::SpanError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kUsage;
}
