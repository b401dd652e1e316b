#pragma once

#include "jade/model.hpp"

namespace jade {

/// CIR-domain denoising and dimension reduction.
///
/// Chain: common phase-slope removal, zero-padded IFFT to `ifft_points` taps,
/// rectangular delay window, re-centering of the window block to tap 0 and a
/// forward FFT to `fft_points_out` subcarriers.
struct PreprocessConfig {
    /// 0 means the smallest power of two not below the input subcarrier count.
    Eigen::Index ifft_points = 0;
    double window_lo_s = -166.67e-9;
    double window_hi_s = 166.67e-9;
    Eigen::Index fft_points_out = 64;
    /// Reduced subcarriers dropped at each edge of the occupied band.
    Eigen::Index band_guard = 2;

    Eigen::Index resolved_ifft_points(Eigen::Index num_subcarriers) const {
        if (ifft_points != 0) return ifft_points;
        Eigen::Index L = 1;
        while (L < num_subcarriers) L *= 2;
        return L;
    }
    void validate(const SrsConfig& srs) const;
};

struct CirVector {
    CVector taps;
    double tap_spacing_s = 0.0;
    /// Signed tap range retained by window_cir; the full circle before windowing.
    Eigen::Index first_tap = 0;
    Eigen::Index last_tap = -1;

    Eigen::Index size() const { return taps.size(); }
    Eigen::Index block_length() const { return last_tap - first_tap + 1; }
};

struct SlopeRemoval {
    CfrMatrix cfr;
    /// Phase decrement per subcarrier, 2 pi df tau0 for a pure delay tau0.
    double slope_rad = 0.0;
};

/// Common lag-one phase slope of all channels. Throws EstimationError on all-zero input.
double estimate_phase_slope(const CfrMatrix& cfr);

/// Multiplies row m by exp(+j m slope) and moves the removed delay into delay_offset_s.
CfrMatrix apply_phase_slope_removal(const CfrMatrix& cfr, double slope_rad);

SlopeRemoval remove_phase_slope(const CfrMatrix& cfr);

/// taps[l] = (1/M) sum_m h[m] exp(+j 2 pi m l / L), so an on-tap path of gain g
/// appears as a single tap of value g. Parseval: |taps|^2 = (L / M^2) |h|^2.
CirVector cfr_to_cir(const CVector& column, Eigen::Index ifft_points, double subcarrier_spacing_hz);

/// Rectangular window over signed delays [lo, hi]; taps past L/2 count as negative.
CirVector window_cir(const CirVector& cir, double lo_s, double hi_s);

/// Rotates the retained block so first_tap lands on output tap 0 and applies
/// an unnormalized forward FFT of length fft_points_out.
CVector cir_to_reduced_cfr(const CirVector& cir, Eigen::Index fft_points_out);

/// Slope used by preprocess: the estimate rounded to a whole number of CIR taps,
/// which keeps step one a lossless circular shift.
struct PreprocessPlan {
    double slope_rad = 0.0;
};

PreprocessPlan plan_preprocess(const CfrMatrix& cfr, const PreprocessConfig& cfg);

/// Output spacing is L df / M~; the output marks the rows below (M - 1) df,
/// minus band_guard at each edge, as its band. delay_offset_s grows by the removed slope delay
/// plus first_tap * tap_spacing. Energy bound: |out|^2 <= (M~ L / M^2) |in|^2.
CfrMatrix apply_preprocess(const CfrMatrix& cfr, const PreprocessConfig& cfg, const PreprocessPlan& plan);

CfrMatrix preprocess(const CfrMatrix& cfr, const PreprocessConfig& cfg);

/// Rows band_first .. band_first + band_size - 1 as a regular CFR. Dropping the
/// leading rows scales each path by a constant phase, so delays and
/// inter-channel ratios are unchanged.
CfrMatrix in_band(const CfrMatrix& cfr);

}  // namespace jade
