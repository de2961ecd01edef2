#pragma once

// JSON and CSV interchange. Complex numbers are [re, im] pairs; matrices are
// row-major arrays of rows. CSV files may start with "# key=value" metadata
// lines.

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwm/entanglement.hpp"
#include "fwm/polstate.hpp"
#include "fwm/timecorr.hpp"
#include "fwm/tomography.hpp"

namespace fwm::io {

using nlohmann::json;
using Metadata = std::map<std::string, std::string>;

/// 17 significant digits; integral values print without a decimal point.
std::string format_number(double value);

json to_json(std::complex<double> z);
json to_json(const Projector& p);
json to_json(const BiphotonKet& k);
json to_json(const DensityMatrix4& rho);
json to_json(const PathAmplitudes& p);
json to_json(const MetricReport& m);
json to_json(const ResampledMetrics& m);
json to_json(const TomographyResult& r);
json to_json(const SinglePathParams& p);
json to_json(const BeatModelParams& p);
json to_json(const SingleFit& f);
json to_json(const BeatFit& f);

/// The parsers throw ParseError naming the offending field.
std::complex<double> complex_from_json(const json& j, const std::string& field = "complex");
Projector projector_from_json(const json& j);
BiphotonKet ket_from_json(const json& j);
DensityMatrix4 density_from_json(const json& j);

inline constexpr const char* kCountsHeader =
    "label,proj_s_h_re,proj_s_h_im,proj_s_v_re,proj_s_v_im,"
    "proj_i_h_re,proj_i_h_im,proj_i_v_re,proj_i_v_im,counts,exposure";
inline constexpr const char* kHistogramHeader = "bin_start_ns,counts";

void write_counts_csv(std::ostream& out, std::span<const CountsRecord> records,
                      const Metadata& metadata = {});
/// Throws ParseError (line, field) on malformed rows; an empty record list is
/// returned as-is for the caller to reject.
std::vector<CountsRecord> read_counts_csv(std::istream& in, Metadata* metadata = nullptr);

void write_histogram_csv(std::ostream& out, const CoincidenceHistogram& h);
/// Bin width comes from the spacing of bin starts (or `bin_width_ns` metadata
/// for single-bin files, which then fail validation).
CoincidenceHistogram read_histogram_csv(std::istream& in);

/// FNV-1a 64-bit digest, hex encoded, for provenance blocks.
std::string digest(std::string_view bytes);

}  // namespace fwm::io
