#include "jade/doa_cbf.hpp"

#include <algorithm>
#include <cmath>

#include "jade/calibration.hpp"
#include "jade/errors.hpp"

namespace jade {

std::vector<double> AngleGrid::angles() const {
    std::vector<double> out(static_cast<std::size_t>(size()));
    for (std::size_t q = 0; q < out.size(); ++q) {
        out[q] = std::min(min_deg + static_cast<double>(q) * step_deg, max_deg);
    }
    return out;
}

Eigen::Index AngleGrid::size() const {
    return static_cast<Eigen::Index>(std::floor((max_deg - min_deg) / step_deg + 1e-9)) + 1;
}

void AngleGrid::validate() const {
    if (!(step_deg > 0.0) || !(max_deg > min_deg)) {
        throw ConfigError("angle grid needs step > 0 and max > min");
    }
    if (min_deg < -90.0 || max_deg > 90.0) {
        throw ConfigError("angle grid must stay within [-90, 90] degrees");
    }
}

RVector average_spectra(std::span<const ToaSpectrum> spectra) {
    if (spectra.empty()) {
        throw ConfigError("average_spectra needs at least one spectrum");
    }
    RVector avg = RVector::Zero(spectra.front().amplitudes.size());
    for (const auto& s : spectra) {
        if (s.amplitudes.size() != avg.size()) {
            throw ConfigError("spectra have different grid sizes");
        }
        avg += s.amplitudes.cwiseAbs();
    }
    return avg / static_cast<double>(spectra.size());
}

std::vector<PathDetection> detect_paths(const RVector& avg, const DelayGrid& grid, double threshold_db,
                                        std::span<const ToaSpectrum> spectra) {
    if (!(threshold_db > 0.0)) {
        throw ConfigError("detection threshold must be > 0 dB");
    }
    const Eigen::Index P = avg.size();
    if (P != grid.num_points) {
        throw ConfigError("averaged spectrum length does not match the delay grid");
    }
    const std::vector<SpanPoint> span = grid.span_points();

    // Label circular runs of equal values and mark the runs that are local maxima.
    std::vector<Eigen::Index> run_of(static_cast<std::size_t>(P), 0);
    std::vector<bool> run_is_max;
    Eigen::Index start = 0;
    while (start < P && avg[start] == avg[(start + P - 1) % P]) ++start;
    if (start == P) {
        run_is_max.push_back(true);
    } else {
        Eigen::Index i = start;
        for (Eigen::Index count = 0; count < P;) {
            const Eigen::Index id = static_cast<Eigen::Index>(run_is_max.size());
            const double v = avg[i];
            const double left = avg[(i + P - 1) % P];
            Eigen::Index j = i;
            while (count < P && avg[j] == v) {
                run_of[static_cast<std::size_t>(j)] = id;
                j = (j + 1) % P;
                ++count;
            }
            run_is_max.push_back(left < v && avg[j] < v);
            i = j;
        }
    }

    double peak = 0.0;
    for (const auto& sp : span) peak = std::max(peak, avg[sp.index]);
    std::vector<PathDetection> out;
    if (peak > 0.0) {
        const double floor_amp = peak * std::pow(10.0, -threshold_db / 20.0);
        std::vector<bool> reported(run_is_max.size(), false);
        for (const auto& sp : span) {
            const auto id = static_cast<std::size_t>(run_of[static_cast<std::size_t>(sp.index)]);
            const double v = avg[sp.index];
            if (!run_is_max[id] || reported[id] || !(v > 0.0) || v < floor_amp) continue;
            reported[id] = true;
            PathDetection d;
            d.grid_index = sp.index;
            d.delay_s = sp.delay_s;
            d.mean_amplitude = v;
            d.amp_db = 20.0 * std::log10(v / peak);
            if (!spectra.empty()) {
                d.amplitudes.resize(static_cast<Eigen::Index>(spectra.size()));
                for (std::size_t n = 0; n < spectra.size(); ++n) {
                    d.amplitudes[static_cast<Eigen::Index>(n)] = spectra[n].amplitudes[sp.index];
                }
            }
            out.push_back(std::move(d));
        }
    }
    if (out.empty()) {
        throw NoPathError("no spectral peak inside the delay search span");
    }
    return out;
}

const PathDetection& select_los(const std::vector<PathDetection>& detections) {
    if (detections.empty()) {
        throw NoPathError("no detections to select a LOS path from");
    }
    return detections.front();
}

CbfResult cbf_doa(const CVector& b_los, const SteeringModel& steering, const AngleGrid& grid) {
    grid.validate();
    if (b_los.size() != steering.num_elements()) {
        throw ConfigError("b_los length does not match the steering model");
    }
    const std::vector<double> angles = grid.angles();
    CbfResult res;
    res.spectrum.resize(static_cast<Eigen::Index>(angles.size()));
    Eigen::Index best = 0;
    for (Eigen::Index q = 0; q < res.spectrum.size(); ++q) {
        res.spectrum[q] = std::abs(steering(angles[static_cast<std::size_t>(q)]).dot(b_los));
        if (res.spectrum[q] > res.spectrum[best]) best = q;
    }
    res.doa_deg = angles[static_cast<std::size_t>(best)];
    return res;
}

std::string to_string(ToaEstimator e) {
    switch (e) {
        case ToaEstimator::Periodogram: return "periodogram";
        case ToaEstimator::DenseIaa: return "iaa";
        case ToaEstimator::FftIaa: return "fft-iaa";
    }
    return "unknown";
}

DelayGrid search_grid(const CfrMatrix& cfr, const JadeConfig& cfg) {
    DelayGrid g = DelayGrid::full(cfr.srs, cfg.delay_grid_points);
    g.search_lo_s = cfg.search_lo_s - cfr.delay_offset_s;
    g.search_hi_s = cfg.search_hi_s - cfr.delay_offset_s;
    g.validate(cfr.num_subcarriers());
    return g;
}

CfrMatrix prepare_cfr(const CfrMatrix& cfr, const JadeConfig& cfg) {
    CfrMatrix out = cfg.rf_calibration ? calibrate_channel(cfr, *cfg.rf_calibration) : cfr;
    if (cfg.preprocess) out = in_band(preprocess(out, *cfg.preprocess));
    return out;
}

namespace {

double parabolic_offset(const RVector& avg, Eigen::Index p) {
    const Eigen::Index P = avg.size();
    const double l = avg[(p + P - 1) % P];
    const double c = avg[p];
    const double r = avg[(p + 1) % P];
    const double den = l - 2.0 * c + r;
    if (den >= 0.0) return 0.0;
    return std::clamp(0.5 * (l - r) / den, -0.5, 0.5);
}

}  // namespace

JadeEstimate jade_prepared(const CfrMatrix& prepared, const SteeringModel& steering, const JadeConfig& cfg) {
    const DelayGrid grid = search_grid(prepared, cfg);
    JadeEstimate est;
    est.estimator = to_string(cfg.toa_estimator);
    est.delay_offset_s = prepared.delay_offset_s;
    switch (cfg.toa_estimator) {
        case ToaEstimator::Periodogram:
            for (Eigen::Index n = 0; n < prepared.channel_count(); ++n) {
                est.spectra.push_back(periodogram_toa(prepared.data.col(n), grid));
            }
            break;
        case ToaEstimator::DenseIaa:
            est.spectra = multichannel_toa(prepared, grid, cfg.iaa, ToaImpl::Dense);
            break;
        case ToaEstimator::FftIaa:
            est.spectra = multichannel_toa(prepared, grid, cfg.iaa, ToaImpl::Fft);
            break;
    }
    for (const auto& s : est.spectra) est.iterations = std::max(est.iterations, s.iterations);

    const RVector avg = average_spectra(est.spectra);
    est.detections = detect_paths(avg, grid, cfg.threshold_db, est.spectra);
    const PathDetection& los = select_los(est.detections);
    est.b_los = los.amplitudes;
    double delay = los.delay_s;
    if (cfg.interpolate_toa) delay += parabolic_offset(avg, los.grid_index) * grid.spacing_s();
    est.toa_s = delay + prepared.delay_offset_s;

    CbfResult cbf = cbf_doa(est.b_los, steering, cfg.angles);
    est.doa_deg = cbf.doa_deg;
    est.beam_spectrum = std::move(cbf.spectrum);
    return est;
}

JadeEstimate jade(const CfrMatrix& cfr, const SteeringModel& steering, const JadeConfig& cfg) {
    return jade_prepared(prepare_cfr(cfr, cfg), steering, cfg);
}

}  // namespace jade
