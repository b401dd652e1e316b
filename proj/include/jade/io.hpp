#pragma once

#include <filesystem>
#include <optional>
#include <span>

#include "json.hpp"

#include "jade/calibration.hpp"
#include "jade/doa_cbf.hpp"
#include "jade/model.hpp"

namespace jade {

using Json = nlohmann::json;

Json to_json(const SrsConfig& srs);
SrsConfig srs_from_json(const Json& j);
Json to_json(const ArrayGeometry& geom);
ArrayGeometry geometry_from_json(const Json& j);
Json to_json(const PhaseErrorPolynomial& poly);
PhaseErrorPolynomial polynomial_from_json(const Json& j);
/// {doa_deg, toa_ns, range_m, n_iterations, detections: [{delay_ns, amp_db}], estimator}
Json to_json(const JadeEstimate& est);

/// Side car for `csv` lives next to it with a .json extension.
std::filesystem::path cfr_sidecar_path(const std::filesystem::path& csv);

/// CSV `m,n,re,im` (zero-based indices) plus the JSON side car.
void write_cfr(const std::filesystem::path& csv, const CfrMatrix& cfr,
               const std::optional<ArrayGeometry>& geometry = std::nullopt);

struct CfrFile {
    CfrMatrix cfr;
    std::optional<ArrayGeometry> geometry;
};

CfrFile read_cfr(const std::filesystem::path& csv);

/// CSV `p,delay_ns,channel,re,im`; delay_ns is absolute (grid delay plus offset).
void write_spectrum_dump(const std::filesystem::path& csv, std::span<const ToaSpectrum> spectra,
                         double delay_offset_s);

/// CSV `angle_deg,phi_1_rad,...,phi_N_rad`.
AntennaErrorMeasurements read_measurements(const std::filesystem::path& csv);
void write_measurements(const std::filesystem::path& csv, const AntennaErrorMeasurements& meas);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace jade
