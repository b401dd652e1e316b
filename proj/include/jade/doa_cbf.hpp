#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jade/array_errors.hpp"
#include "jade/model.hpp"
#include "jade/preprocess.hpp"
#include "jade/toa_iaa.hpp"

namespace jade {

struct AngleGrid {
    double min_deg = -60.0;
    double max_deg = 60.0;
    double step_deg = 0.2;

    std::vector<double> angles() const;
    Eigen::Index size() const;
    void validate() const;
};

struct PathDetection {
    Eigen::Index grid_index = 0;
    /// Delay in the spectrum's own frame (add the CFR delay offset for absolute time).
    double delay_s = 0.0;
    double mean_amplitude = 0.0;
    /// 20 log10 of the amplitude relative to the strongest in-span value.
    double amp_db = 0.0;
    CVector amplitudes;
};

struct JadeEstimate {
    double doa_deg = 0.0;
    /// Absolute TOA, delay offsets already added back.
    double toa_s = 0.0;
    CVector b_los;
    int iterations = 0;
    std::vector<PathDetection> detections;
    std::string estimator;
    double delay_offset_s = 0.0;
    RVector beam_spectrum;
    std::vector<ToaSpectrum> spectra;

    double range_m() const { return toa_s * kSpeedOfLight; }
};

/// beta_bar = (1/N) sum_n |beta_n|.
RVector average_spectra(std::span<const ToaSpectrum> spectra);

/// Local maxima of `avg` inside the grid's search span that lie within
/// threshold_db of the strongest in-span value, ascending in delay. Plateaus
/// count once, at their earliest in-span point. Per-channel amplitudes are
/// filled from `spectra` when given. Throws NoPathError if nothing qualifies.
std::vector<PathDetection> detect_paths(const RVector& avg, const DelayGrid& grid, double threshold_db,
                                        std::span<const ToaSpectrum> spectra = {});

/// Earliest detection.
const PathDetection& select_los(const std::vector<PathDetection>& detections);

struct CbfResult {
    double doa_deg = 0.0;
    RVector spectrum;
};

/// argmax over the grid of |a(theta)^H b|; the first grid angle wins ties.
CbfResult cbf_doa(const CVector& b_los, const SteeringModel& steering, const AngleGrid& grid);

enum class ToaEstimator { Periodogram, DenseIaa, FftIaa };

std::string to_string(ToaEstimator e);

struct JadeConfig {
    ToaEstimator toa_estimator = ToaEstimator::FftIaa;
    IaaSettings iaa;
    /// 0 selects DelayGrid::default_points for the (reduced) CFR.
    Eigen::Index delay_grid_points = 0;
    /// Absolute delay search span.
    double search_lo_s = 0.0;
    double search_hi_s = 166.67e-9;
    AngleGrid angles;
    double threshold_db = 10.0;
    /// Parabolic refinement of the LOS delay on the averaged spectrum.
    bool interpolate_toa = false;
    std::optional<PreprocessConfig> preprocess;
    std::optional<RfChannelResponse> rf_calibration;
};

/// Search grid for a CFR: absolute span mapped into the CFR's delay frame.
DelayGrid search_grid(const CfrMatrix& cfr, const JadeConfig& cfg);

/// Channel calibration and optional preprocessing, as applied ahead of every estimator.
CfrMatrix prepare_cfr(const CfrMatrix& cfr, const JadeConfig& cfg);

/// TOA spectra per channel, detection, LOS selection and CBF on an already prepared CFR.
JadeEstimate jade_prepared(const CfrMatrix& prepared, const SteeringModel& steering, const JadeConfig& cfg);

JadeEstimate jade(const CfrMatrix& cfr, const SteeringModel& steering, const JadeConfig& cfg);

}  // namespace jade
