#include "jade/preprocess.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "jade/errors.hpp"
#include "jade/fft.hpp"

namespace jade {

void PreprocessConfig::validate(const SrsConfig& srs) const {
    const Eigen::Index M = srs.num_subcarriers;
    const Eigen::Index L = resolved_ifft_points(M);
    if (L < M) {
        throw ConfigError("preprocess.ifft_points must be >= the subcarrier count (" + std::to_string(M) + ")");
    }
    if (fft_points_out < 2 || fft_points_out > L) {
        throw ConfigError("preprocess.fft_points_out must lie in [2, ifft_points]");
    }
    if (band_guard < 0 || (M - 1) * fft_points_out / L + 1 - 2 * band_guard < 2) {
        throw ConfigError("preprocess.band_guard leaves fewer than two in-band subcarriers");
    }
    if (!(window_lo_s <= window_hi_s) || !std::isfinite(window_lo_s) || !std::isfinite(window_hi_s)) {
        throw ConfigError("preprocess window must satisfy lo <= hi");
    }
    const double ts = 1.0 / (static_cast<double>(L) * srs.subcarrier_spacing_hz);
    const auto lo = static_cast<Eigen::Index>(std::ceil(window_lo_s / ts - 1e-9));
    const auto hi = static_cast<Eigen::Index>(std::floor(window_hi_s / ts + 1e-9));
    if (std::min<Eigen::Index>(hi - lo + 1, L) > fft_points_out) {
        throw ConfigError("preprocess window spans " + std::to_string(hi - lo + 1) +
                          " taps, more than fft_points_out");
    }
}

double estimate_phase_slope(const CfrMatrix& cfr) {
    const CMatrix& h = cfr.data;
    if (h.rows() < 2) {
        throw ConfigError("phase slope needs at least two subcarriers");
    }
    cd acc{0.0, 0.0};
    for (Eigen::Index n = 0; n < h.cols(); ++n) {
        for (Eigen::Index m = 0; m + 1 < h.rows(); ++m) {
            acc += h(m + 1, n) * std::conj(h(m, n));
        }
    }
    if (std::abs(acc) == 0.0) {
        throw EstimationError("cannot estimate the phase slope of an all-zero CFR");
    }
    return -std::arg(acc);
}

CfrMatrix apply_phase_slope_removal(const CfrMatrix& cfr, double slope_rad) {
    CfrMatrix out = cfr;
    for (Eigen::Index m = 0; m < out.data.rows(); ++m) {
        out.data.row(m) *= std::polar(1.0, slope_rad * static_cast<double>(m));
    }
    out.delay_offset_s += slope_rad / (kTwoPi * cfr.srs.subcarrier_spacing_hz);
    return out;
}

SlopeRemoval remove_phase_slope(const CfrMatrix& cfr) {
    const double slope = estimate_phase_slope(cfr);
    return {apply_phase_slope_removal(cfr, slope), slope};
}

CirVector cfr_to_cir(const CVector& column, Eigen::Index ifft_points, double subcarrier_spacing_hz) {
    if (ifft_points < column.size()) {
        throw ConfigError("ifft_points must be at least the CFR length");
    }
    CirVector cir;
    cir.taps.resize(ifft_points);
    Fft ifft(static_cast<std::size_t>(ifft_points), FftDirection::Backward);
    ifft.transform({column.data(), static_cast<std::size_t>(column.size())},
                   {cir.taps.data(), static_cast<std::size_t>(ifft_points)});
    cir.taps /= static_cast<double>(column.size());
    cir.tap_spacing_s = 1.0 / (static_cast<double>(ifft_points) * subcarrier_spacing_hz);
    cir.first_tap = 0;
    cir.last_tap = ifft_points - 1;
    return cir;
}

CirVector window_cir(const CirVector& cir, double lo_s, double hi_s) {
    if (!(lo_s <= hi_s)) {
        throw ConfigError("delay window must satisfy lo <= hi");
    }
    const Eigen::Index L = cir.size();
    auto lo = static_cast<Eigen::Index>(std::ceil(lo_s / cir.tap_spacing_s - 1e-9));
    auto hi = static_cast<Eigen::Index>(std::floor(hi_s / cir.tap_spacing_s + 1e-9));
    if (hi - lo + 1 >= L) {
        hi = lo + L - 1;
    }
    CirVector out = cir;
    out.taps.setZero();
    for (Eigen::Index s = lo; s <= hi; ++s) {
        const Eigen::Index l = ((s % L) + L) % L;
        out.taps[l] = cir.taps[l];
    }
    out.first_tap = lo;
    out.last_tap = hi;
    return out;
}

CVector cir_to_reduced_cfr(const CirVector& cir, Eigen::Index fft_points_out) {
    const Eigen::Index L = cir.size();
    const Eigen::Index W = cir.block_length();
    if (W > fft_points_out) {
        throw ConfigError("retained CIR block (" + std::to_string(W) + " taps) exceeds fft_points_out");
    }
    std::vector<cd> block(static_cast<std::size_t>(W));
    for (Eigen::Index w = 0; w < W; ++w) {
        const Eigen::Index l = (((cir.first_tap + w) % L) + L) % L;
        block[static_cast<std::size_t>(w)] = cir.taps[l];
    }
    CVector out(fft_points_out);
    Fft fft(static_cast<std::size_t>(fft_points_out), FftDirection::Forward);
    fft.transform(block, {out.data(), static_cast<std::size_t>(fft_points_out)});
    return out;
}

PreprocessPlan plan_preprocess(const CfrMatrix& cfr, const PreprocessConfig& cfg) {
    const Eigen::Index L = cfg.resolved_ifft_points(cfr.num_subcarriers());
    const double tap_phase = kTwoPi / static_cast<double>(L);
    const double slope = estimate_phase_slope(cfr);
    return {std::round(slope / tap_phase) * tap_phase};
}

CfrMatrix apply_preprocess(const CfrMatrix& cfr, const PreprocessConfig& cfg, const PreprocessPlan& plan) {
    cfg.validate(cfr.srs);
    const Eigen::Index M = cfr.num_subcarriers();
    const Eigen::Index L = cfg.resolved_ifft_points(M);
    const Eigen::Index Mt = cfg.fft_points_out;
    const CfrMatrix sloped = apply_phase_slope_removal(cfr, plan.slope_rad);

    CfrMatrix out;
    out.data.resize(Mt, cfr.channel_count());
    out.srs = cfr.srs;
    out.srs.num_subcarriers = Mt;
    out.srs.subcarrier_spacing_hz = cfr.srs.subcarrier_spacing_hz * static_cast<double>(L) / static_cast<double>(Mt);

    double first_tap_delay = 0.0;
    for (Eigen::Index n = 0; n < cfr.channel_count(); ++n) {
        const CirVector cir = cfr_to_cir(sloped.data.col(n), L, cfr.srs.subcarrier_spacing_hz);
        // The chain's inspection step between IFFT and windowing has no effect on the data.
        const CirVector win = window_cir(cir, cfg.window_lo_s, cfg.window_hi_s);
        out.data.col(n) = cir_to_reduced_cfr(win, Mt);
        first_tap_delay = static_cast<double>(win.first_tap) * win.tap_spacing_s;
    }
    out.delay_offset_s = sloped.delay_offset_s + first_tap_delay;
    const Eigen::Index occupied = (M - 1) * Mt / L + 1;
    out.band_first = cfg.band_guard;
    out.band_size = occupied - 2 * cfg.band_guard;
    return out;
}

CfrMatrix in_band(const CfrMatrix& cfr) {
    if (cfr.band_size == 0) return cfr;
    CfrMatrix out;
    out.data = cfr.data.middleRows(cfr.band_first, cfr.band_size);
    out.srs = cfr.srs;
    out.srs.num_subcarriers = cfr.band_size;
    out.delay_offset_s = cfr.delay_offset_s;
    return out;
}

CfrMatrix preprocess(const CfrMatrix& cfr, const PreprocessConfig& cfg) {
    cfg.validate(cfr.srs);
    return apply_preprocess(cfr, cfg, plan_preprocess(cfr, cfg));
}

}  // namespace jade
