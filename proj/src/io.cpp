#include "fwm/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm::io {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

json to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

json to_json(const Projector& p) {
  return {{"basis", "linear"}, {"components", {to_json(p.c_h()), to_json(p.c_v())}}};
}

json to_json(const BiphotonKet& k) {
  json amps = json::array();
  for (Eigen::Index i = 0; i < 4; ++i) amps.push_back(to_json(k[i]));
  return {{"basis", to_string(k.basis())}, {"amplitudes", amps}};
}

json to_json(const DensityMatrix4& rho) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < 4; ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < 4; ++c) row.push_back(to_json(rho.matrix()(r, c)));
    rows.push_back(row);
  }
  return {{"basis", to_string(rho.basis())}, {"matrix", rows}};
}

json to_json(const PathAmplitudes& p) { return {{"a0", p.a0}, {"a1", p.a1}, {"phi0", p.phi0}}; }

json to_json(const MetricReport& m) {
  json j = {{"purity", m.purity}, {"concurrence", m.concurrence}, {"eof", m.eof}};
  j["fidelity"] = m.fidelity ? json(*m.fidelity) : json(nullptr);
  return j;
}

json to_json(const ResampledMetrics& m) {
  auto summary = [](const MetricSummary& s) { return json{{"mean", s.mean}, {"stddev", s.stddev}}; };
  json j = {{"n_resamples", m.n_resamples},
            {"purity", summary(m.purity)},
            {"concurrence", summary(m.concurrence)},
            {"eof", summary(m.eof)}};
  j["fidelity"] = m.fidelity ? summary(*m.fidelity) : json(nullptr);
  return j;
}

json to_json(const TomographyResult& r) {
  json j = {{"rho", to_json(r.rho)},
            {"log_likelihood", r.log_likelihood},
            {"iterations", r.iterations},
            {"converged", r.converged}};
  j["resampled_metrics"] = r.resampled_metrics ? to_json(*r.resampled_metrics) : json(nullptr);
  return j;
}

json to_json(const SinglePathParams& p) {
  return {{"G0", p.G0}, {"tau_r", p.tau_r}, {"tau_d", p.tau_d}, {"background", p.background}};
}

json to_json(const BeatModelParams& p) {
  return {{"G0", p.G0}, {"tau_x", p.tau_x}, {"tau_y", p.tau_y},         {"R", p.R},
          {"phi", p.phi}, {"delta", p.delta}, {"background", p.background}};
}

json to_json(const SingleFit& f) {
  json params = to_json(f.params);
  json sigmas = to_json(f.sigmas);
  params["offset"] = f.offset;
  sigmas["offset"] = f.offset_sigma;
  return {{"model", "single"},         {"params", params},  {"sigmas", sigmas},
          {"chi2_reduced", f.chi2_reduced}, {"n_dof", f.n_dof}, {"converged", f.converged},
          {"iterations", f.iterations}};
}

json to_json(const BeatFit& f) {
  json params = to_json(f.params);
  json sigmas = to_json(f.sigmas);
  params["amplitude"] = f.amplitude;
  sigmas["amplitude"] = f.amplitude_sigma;
  params["offset"] = f.offset;
  sigmas["offset"] = f.offset_sigma;
  return {{"model", "beats"},          {"params", params},  {"sigmas", sigmas},
          {"chi2_reduced", f.chi2_reduced}, {"n_dof", f.n_dof}, {"converged", f.converged},
          {"iterations", f.iterations}};
}

std::complex<double> complex_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(0, field, "expected [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

namespace {

Basis basis_field(const json& j) {
  if (!j.contains("basis") || !j["basis"].is_string()) {
    throw ParseError(0, "basis", "missing basis tag");
  }
  try {
    return parse_basis(j["basis"].get<std::string>());
  } catch (const DomainError& e) {
    throw ParseError(0, "basis", e.what());
  }
}

}  // namespace

Projector projector_from_json(const json& j) {
  if (!j.contains("components") || !j["components"].is_array() || j["components"].size() != 2) {
    throw ParseError(0, "components", "expected two complex components");
  }
  Jones<double> v(complex_from_json(j["components"][0], "components[0]"),
                  complex_from_json(j["components"][1], "components[1]"));
  if (basis_field(j) == Basis::circular) v = (circular_to_linear<double>() * v).eval();
  try {
    return Projector(v(0), v(1));
  } catch (const DomainError& e) {
    throw ParseError(0, "components", e.what());
  }
}

BiphotonKet ket_from_json(const json& j) {
  if (!j.contains("amplitudes") || !j["amplitudes"].is_array() || j["amplitudes"].size() != 4) {
    throw ParseError(0, "amplitudes", "expected four complex amplitudes");
  }
  Amplitudes4<double> a;
  for (int i = 0; i < 4; ++i) {
    a(i) = complex_from_json(j["amplitudes"][i], "amplitudes[" + std::to_string(i) + "]");
  }
  try {
    return BiphotonKet(a, basis_field(j));
  } catch (const DomainError& e) {
    throw ParseError(0, "amplitudes", e.what());
  }
}

DensityMatrix4 density_from_json(const json& j) {
  if (!j.contains("matrix") || !j["matrix"].is_array() || j["matrix"].size() != 4) {
    throw ParseError(0, "matrix", "expected 4 rows");
  }
  Matrix4c<double> m;
  for (int r = 0; r < 4; ++r) {
    const json& row = j["matrix"][r];
    if (!row.is_array() || row.size() != 4) {
      throw ParseError(0, "matrix[" + std::to_string(r) + "]", "expected 4 entries");
    }
    for (int c = 0; c < 4; ++c) {
      m(r, c) = complex_from_json(row[c], "matrix[" + std::to_string(r) + "][" +
                                              std::to_string(c) + "]");
    }
  }
  try {
    return DensityMatrix4(m, basis_field(j));
  } catch (const DomainError& e) {
    throw ParseError(0, "matrix", e.what());
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, std::size_t line, const std::string& field) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ParseError(line, field, "not a number: '" + t + "'");
  }
  if (used != t.size() || !std::isfinite(v)) {
    throw ParseError(line, field, "not a finite number: '" + t + "'");
  }
  return v;
}

void write_metadata(std::ostream& out, const Metadata& metadata) {
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
}

// Reads "# key=value" lines and blank lines; returns the first data line
// (the header) and its line number.
bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no,
                       Metadata* metadata) {
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto eq = t.find('=');
      if (metadata != nullptr && eq != std::string::npos) {
        (*metadata)[trim(t.substr(1, eq - 1))] = trim(t.substr(eq + 1));
      }
      continue;
    }
    line = t;
    return true;
  }
  return false;
}

Projector projector_from_cells(const std::vector<std::string>& cells, std::size_t offset,
                               std::size_t line, const std::string& prefix) {
  const std::complex<double> h(parse_double(cells[offset], line, prefix + "_h_re"),
                               parse_double(cells[offset + 1], line, prefix + "_h_im"));
  const std::complex<double> v(parse_double(cells[offset + 2], line, prefix + "_v_re"),
                               parse_double(cells[offset + 3], line, prefix + "_v_im"));
  const double n2 = std::norm(h) + std::norm(v);
  // Hand-written files round to a few digits; anything further off is an error.
  if (std::abs(n2 - 1.0) > 1e-3) throw ParseError(line, prefix, "projector is not normalized");
  return Projector::normalized(h, v);
}

}  // namespace

void write_counts_csv(std::ostream& out, std::span<const CountsRecord> records,
                      const Metadata& metadata) {
  write_metadata(out, metadata);
  out << kCountsHeader << '\n';
  for (const CountsRecord& r : records) {
    out << r.setting.label;
    for (const Projector* p : {&r.setting.proj_s, &r.setting.proj_i}) {
      out << ',' << format_number(p->c_h().real()) << ',' << format_number(p->c_h().imag())
          << ',' << format_number(p->c_v().real()) << ',' << format_number(p->c_v().imag());
    }
    out << ',' << format_number(r.counts) << ',' << format_number(r.exposure) << '\n';
  }
}

std::vector<CountsRecord> read_counts_csv(std::istream& in, Metadata* metadata) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<CountsRecord> out;
  if (!next_content_line(in, line, line_no, metadata)) return out;
  if (line != kCountsHeader) {
    throw ParseError(line_no, "header", std::string("expected '") + kCountsHeader + "'");
  }
  while (next_content_line(in, line, line_no, metadata)) {
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != 11) {
      throw ParseError(line_no, "", "expected 11 fields, found " + std::to_string(cells.size()));
    }
    CountsRecord r{{projector_from_cells(cells, 1, line_no, "proj_s"),
                    projector_from_cells(cells, 5, line_no, "proj_i"), trim(cells[0])},
                   parse_double(cells[9], line_no, "counts"),
                   parse_double(cells[10], line_no, "exposure")};
    if (r.counts < 0.0) throw ParseError(line_no, "counts", "counts must be >= 0");
    if (!(r.exposure > 0.0)) throw ParseError(line_no, "exposure", "exposure must be > 0");
    out.push_back(std::move(r));
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const CoincidenceHistogram& h) {
  Metadata meta = h.metadata;
  meta["bin_width_ns"] = format_number(h.bin_width);
  write_metadata(out, meta);
  out << kHistogramHeader << '\n';
  for (std::size_t i = 0; i < h.size(); ++i) {
    out << format_number(h.bin_start(i)) << ',' << format_number(h.counts[i]) << '\n';
  }
}

CoincidenceHistogram read_histogram_csv(std::istream& in) {
  CoincidenceHistogram h;
  std::string line;
  std::size_t line_no = 0;
  if (!next_content_line(in, line, line_no, &h.metadata)) {
    throw ParseError(0, "", "empty histogram file");
  }
  if (line != kHistogramHeader) {
    throw ParseError(line_no, "header", std::string("expected '") + kHistogramHeader + "'");
  }
  std::vector<double> starts;
  while (next_content_line(in, line, line_no, &h.metadata)) {
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != 2) throw ParseError(line_no, "", "expected 2 fields");
    starts.push_back(parse_double(cells[0], line_no, "bin_start_ns"));
    const double c = parse_double(cells[1], line_no, "counts");
    if (c < 0.0) throw ParseError(line_no, "counts", "counts must be >= 0");
    h.counts.push_back(c);
  }
  if (starts.empty()) throw ParseError(line_no, "", "histogram has no bins");
  h.t_start = starts.front();
  if (starts.size() >= 2) {
    h.bin_width = starts[1] - starts[0];
    for (std::size_t i = 1; i < starts.size(); ++i) {
      const double expected = h.t_start + h.bin_width * static_cast<double>(i);
      if (std::abs(starts[i] - expected) > 1e-6 * std::max(1.0, std::abs(h.bin_width))) {
        throw ParseError(0, "bin_start_ns", "bins are not uniformly spaced (row " +
                                                 std::to_string(i + 1) + ")");
      }
    }
  } else if (auto it = h.metadata.find("bin_width_ns"); it != h.metadata.end()) {
    h.bin_width = parse_double(it->second, 0, "bin_width_ns");
  }
  if (!(h.bin_width > 0.0)) throw ParseError(0, "bin_start_ns", "bin width must be > 0");
  return h;
}

std::string digest(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace fwm::io
