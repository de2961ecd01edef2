#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "fwm/angmom.hpp"
#include "fwm/entanglement.hpp"
#include "fwm/error.hpp"
#include "fwm/io.hpp"
#include "fwm/polstate.hpp"
#include "fwm/presets.hpp"
#include "fwm/timecorr.hpp"
#include "fwm/tomography.hpp"

namespace fwm::cli {

namespace {

using io::json;

// Collects what every output file must carry: tool, version, command line,
// seed and a digest of each input read.
class Provenance {
 public:
  explicit Provenance(const Context& ctx) : ctx_(ctx) {}

  std::string read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(0, path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();
    digests_[path] = "fnv1a64:" + io::digest(bytes);
    return bytes;
  }

  json metadata() const {
    json digests = json::object();
    for (const auto& [path, d] : digests_) digests[path] = d;
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command_line", ctx_.command_line},
            {"seed", ctx_.seed},
            {"input_digests", digests}};
  }

  io::Metadata csv_metadata() const {
    io::Metadata m{{"tool", kToolName},
                   {"version", kToolVersion},
                   {"command_line", ctx_.command_line},
                   {"seed", std::to_string(ctx_.seed)}};
    for (const auto& [path, d] : digests_) m["input_digest:" + path] = d;
    return m;
  }

  void emit(const std::string& content) const {
    if (ctx_.output.empty()) {
      std::cout << content;
      return;
    }
    std::ofstream out(ctx_.output, std::ios::binary);
    if (!out) throw ParseError(0, ctx_.output, "cannot open output file");
    out << content;
  }

  void emit(json document) const {
    json out = {{"metadata", metadata()}};
    out.update(document);
    emit(out.dump(2) + "\n");
  }

 private:
  const Context& ctx_;
  std::map<std::string, std::string> digests_;
};

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, source, e.what());
  }
}

CascadeLevels levels_from_options(const PredictOptions& opt) {
  if (!opt.levels.empty()) {
    std::vector<int> f;
    std::istringstream ss(opt.levels);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        f.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw ParseError(0, "levels", "not an integer: '" + cell + "'");
      }
    }
    if (f.size() != 4) throw ParseError(0, "levels", "expected F_g,F_b,F_e,F_d");
    return CascadeLevels::from_f(f[0], f[1], f[2], f[3]);
  }
  if (opt.path == "X" || opt.path == "x") return CascadeLevels::path_x();
  if (opt.path == "Y" || opt.path == "y") return CascadeLevels::path_y();
  throw DomainError("unknown path '" + opt.path + "' (expected X or Y)");
}

BiphotonKet predicted_ket(const std::string& path) {
  return ket_from_path(predict_path_state(levels_from_options({path, ""})));
}

// "X"/"Y", or a JSON file holding a ket (bare, or under "ket").
BiphotonKet resolve_ket(Provenance& prov, const std::string& spec) {
  if (spec == "X" || spec == "Y" || spec == "x" || spec == "y") return predicted_ket(spec);
  const json j = parse_json(prov.read(spec), spec);
  return io::ket_from_json(j.contains("ket") ? j["ket"] : j);
}

// A ket or density matrix from a predict/reconstruct output or bare object.
DensityMatrix4 resolve_state(Provenance& prov, const std::string& spec) {
  if (spec == "X" || spec == "Y" || spec == "x" || spec == "y") {
    return density_from_ket(predicted_ket(spec));
  }
  const json j = parse_json(prov.read(spec), spec);
  if (j.contains("rho")) return io::density_from_json(j["rho"]);
  if (j.contains("ket")) return density_from_ket(io::ket_from_json(j["ket"]));
  if (j.contains("matrix")) return io::density_from_json(j);
  return density_from_ket(io::ket_from_json(j));
}

Projector parse_projector(const std::string& text) {
  if (auto named = Projector::named(text)) return *named;
  if (text == "fig3-idler") return fig3_idler_projector();
  std::vector<double> v;
  std::istringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError(0, "projector", "not a number: '" + cell + "'");
    }
  }
  if (v.size() != 4) {
    throw ParseError(0, "projector", "expected H,V,D,A,L,R or h_re,h_im,v_re,v_im");
  }
  return Projector::normalized({v[0], v[1]}, {v[2], v[3]});
}

std::vector<CountsRecord> load_counts(Provenance& prov, const std::string& path,
                                      double background) {
  std::istringstream in(prov.read(path));
  std::vector<CountsRecord> records = io::read_counts_csv(in);
  if (records.empty()) throw ParseError(0, path, "counts file holds no records");
  if (background > 0.0) records = subtract_background(records, background);
  return records;
}

void apply_overrides(SinglePathParams& p, const ModelOptions& o) {
  if (o.G0) p.G0 = *o.G0;
  if (o.tau_r) p.tau_r = *o.tau_r;
  if (o.tau_d) p.tau_d = *o.tau_d;
  if (o.background) p.background = *o.background;
}

void apply_overrides(BeatModelParams& p, const ModelOptions& o) {
  if (o.G0) p.G0 = *o.G0;
  if (o.tau_x) p.tau_x = *o.tau_x;
  if (o.tau_y) p.tau_y = *o.tau_y;
  if (o.R) p.R = *o.R;
  if (o.phi) p.phi = *o.phi;
  if (o.delta) p.delta = *o.delta;
  if (o.background) p.background = *o.background;
}

// Preset (if any) with explicit flags layered on top.
G2Preset resolve_model(const ModelOptions& o) {
  G2Preset preset;
  if (!o.preset.empty()) {
    preset = g2_preset(o.preset);
  } else if (o.model == "single") {
    preset = {"custom", SinglePathParams{1000.0, kRiseX, kTauX, 0.0}, 1.0, -30.0, 80.0};
  } else if (o.model == "beats") {
    BeatModelParams p;
    p.G0 = 10.0;
    p.tau_x = kTauX;
    p.tau_y = kTauY;
    preset = {"custom", p, 0.1, -10.0, 60.0};
  } else {
    throw DomainError("unknown model '" + o.model + "' (expected single or beats)");
  }
  std::visit([&](auto& p) { apply_overrides(p, o); }, preset.model);
  return preset;
}

json report_linear(const LinearInversion& lin, const std::optional<BiphotonKet>& target) {
  const DensityMatrix4 physical = project_to_physical(lin.matrix);
  json raw = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(io::to_json(lin.matrix(r, c)));
    raw.push_back(row);
  }
  return {{"method", "linear"},
          {"raw", {{"basis", "linear"}, {"matrix", raw}}},
          {"min_eigenvalue", lin.min_eigenvalue},
          {"negative", lin.negative},
          {"strongly_negative", lin.strongly_negative},
          {"rho", io::to_json(physical)},
          {"metrics", io::to_json(metrics(physical, target))}};
}

}  // namespace

int run_predict(const Context& ctx, const PredictOptions& opt) {
  Provenance prov(ctx);
  const CascadeLevels levels = levels_from_options(opt);
  const PathAmplitudes amps = predict_path_state(levels);
  const BiphotonKet ket = ket_from_path(amps);
  const DensityMatrix4 rho = density_from_ket(ket);
  const MetricReport m = metrics(rho);
  prov.emit(json{{"levels",
                  {{"F_g", 0.5 * levels.two_f_g},
                   {"F_b", 0.5 * levels.two_f_b},
                   {"F_e", 0.5 * levels.two_f_e},
                   {"F_d", 0.5 * levels.two_f_d}}},
                 {"path_amplitudes", io::to_json(amps)},
                 {"ket", io::to_json(ket)},
                 {"ket_linear", io::to_json(change_basis(ket, Basis::linear))},
                 {"rho", io::to_json(rho)},
                 {"metrics", {{"concurrence", m.concurrence}, {"eof", m.eof}}}});
  return kOk;
}

int run_simulate_tomo(const Context& ctx, const SimulateTomoOptions& opt) {
  Provenance prov(ctx);
  const std::string spec = opt.state_file.empty() ? opt.path : opt.state_file;
  if (spec.empty()) throw DomainError("simulate-tomo needs --path or --state");
  const DensityMatrix4 rho = resolve_state(prov, spec);

  SettingSet kind;
  if (opt.settings == "overcomplete36") {
    kind = SettingSet::overcomplete36;
  } else if (opt.settings == "minimal16") {
    kind = SettingSet::minimal16;
  } else {
    throw DomainError("unknown setting set '" + opt.settings + "'");
  }
  const auto settings = standard_settings(kind);
  const auto records = simulate_counts(rho, settings, opt.n_per_setting, ctx.seed, opt.exposure);

  std::ostringstream out;
  io::write_counts_csv(out, records, prov.csv_metadata());
  prov.emit(out.str());
  return kOk;
}

int run_reconstruct(const Context& ctx, const ReconstructOptions& opt) {
  Provenance prov(ctx);
  const auto records = load_counts(prov, opt.counts_file, opt.background);
  std::optional<BiphotonKet> target;
  if (!opt.target.empty()) target = resolve_ket(prov, opt.target);

  if (opt.method == "linear") {
    prov.emit(report_linear(reconstruct_linear(records), target));
    return kOk;
  }
  if (opt.method != "mle") throw DomainError("unknown method '" + opt.method + "'");

  TomographyResult result = reconstruct_mle(records);
  if (opt.resamples > 0) {
    result.resampled_metrics = resample_uncertainties(records, opt.resamples, ctx.seed, target);
  }
  json doc = io::to_json(result);
  doc["method"] = "mle";
  doc["metrics"] = io::to_json(metrics(result.rho, target));
  prov.emit(doc);
  return kOk;
}

int run_resample(const Context& ctx, const ResampleOptions& opt) {
  Provenance prov(ctx);
  const auto records = load_counts(prov, opt.counts_file, opt.background);
  std::optional<BiphotonKet> target;
  if (!opt.target.empty()) target = resolve_ket(prov, opt.target);
  const ResampledMetrics m = resample_uncertainties(records, opt.n_resamples, ctx.seed, target);
  prov.emit(json{{"resampled_metrics", io::to_json(m)}});
  return kOk;
}

int run_simulate_g2(const Context& ctx, const SimulateG2Options& opt) {
  Provenance prov(ctx);
  const G2Preset preset = resolve_model(opt.model);
  const double bin_width = opt.bin_width.value_or(preset.bin_width);
  const double t_begin = opt.t_begin.value_or(preset.t_begin);
  const double t_end = opt.t_end.value_or(preset.t_end);

  ModelCurve curve = model_curve(preset.model);
  if (opt.jitter > 0.0) curve = convolve_jitter(curve, opt.jitter, model_breakpoints(preset.model));
  CoincidenceHistogram h = simulate_histogram(curve, bin_width, t_begin, t_end, ctx.seed);

  h.metadata = prov.csv_metadata();
  h.metadata["model"] = std::holds_alternative<SinglePathParams>(preset.model) ? "single" : "beats";
  h.metadata["model_params"] =
      std::visit([](const auto& p) { return io::to_json(p).dump(); }, preset.model);
  h.metadata["preset"] = preset.name;
  h.metadata["jitter_ns"] = io::format_number(opt.jitter);

  std::ostringstream out;
  io::write_histogram_csv(out, h);
  prov.emit(out.str());
  return kOk;
}

int run_fit_g2(const Context& ctx, const FitG2Options& opt) {
  Provenance prov(ctx);
  std::istringstream in(prov.read(opt.histogram_file));
  const CoincidenceHistogram h = io::read_histogram_csv(in);
  G2Preset start = resolve_model(opt.model);

  FitWindow window;
  if (opt.t_min) window.t_min = *opt.t_min;
  if (opt.t_max) window.t_max = *opt.t_max;

  if (auto* single = std::get_if<SinglePathParams>(&start.model)) {
    if (opt.model.preset.empty() && !opt.model.G0) {
      single->G0 = std::max(1.0, *std::max_element(h.counts.begin(), h.counts.end()));
    }
    SingleFitOptions fo;
    fo.fit_offset = opt.fit_offset;
    fo.jitter = opt.jitter;
    fo.window = window;
    prov.emit(io::to_json(fit_single(h, *single, fo)));
    return kOk;
  }

  BeatFitOptions fo;
  fo.free_tau_x = opt.free_tau_x;
  fo.free_tau_y = opt.free_tau_y;
  fo.free_R = opt.free_R;
  fo.free_phi = opt.free_phi;
  fo.free_delta = opt.free_delta;
  fo.fit_offset = opt.fit_offset;
  fo.jitter = opt.jitter;
  fo.window = window;
  prov.emit(io::to_json(fit_beats(h, std::get<BeatModelParams>(start.model), fo)));
  return kOk;
}

int run_beat_params(const Context& ctx, const BeatParamsOptions& opt) {
  Provenance prov(ctx);
  const BiphotonKet ket_x = resolve_ket(prov, opt.ket_x_file.empty() ? "X" : opt.ket_x_file);
  const BiphotonKet ket_y = resolve_ket(prov, opt.ket_y_file.empty() ? "Y" : opt.ket_y_file);

  if (opt.target_R) {
    const BeatParams target{*opt.target_R, opt.target_phi.value_or(0.0)};
    const BeatSearchResult r = find_projectors_for_beat(ket_x, ket_y, target);
    prov.emit(json{{"target", {{"R", target.R}, {"phi", target.phi}}},
                   {"attainable", r.attainable},
                   {"residual", r.residual},
                   {"proj_s", io::to_json(r.proj_s)},
                   {"proj_i", io::to_json(r.proj_i)},
                   {"achieved", {{"R", r.achieved.R}, {"phi", r.achieved.phi}}}});
    return kOk;
  }

  const Projector s = parse_projector(opt.signal);
  const Projector i = opt.idler.empty() ? fig3_idler_projector() : parse_projector(opt.idler);
  const BeatParams bp = beat_params(ket_x, ket_y, s, i);
  prov.emit(json{{"proj_s", io::to_json(s)},
                 {"proj_i", io::to_json(i)},
                 {"R", bp.R},
                 {"phi", bp.phi},
                 {"contrast_at_zero", 2.0 * bp.R / (1.0 + bp.R * bp.R)}});
  return kOk;
}

}  // namespace fwm::cli
