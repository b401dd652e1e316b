#pragma once

#include <span>
#include <vector>

#include "jade/model.hpp"

namespace jade {

struct SpanPoint {
    Eigen::Index index;  // grid index in [0, P)
    double delay_s;      // representative delay inside the search span
};

/// Uniform delay grid tau_p = p / (P df) over the full unambiguous range.
/// The search span is expressed in the grid's own delay frame and is read
/// circularly, so a span starting below zero wraps to the top of the grid.
struct DelayGrid {
    double subcarrier_spacing_hz = 60e3;
    Eigen::Index num_points = 0;
    double search_lo_s = 0.0;
    double search_hi_s = 0.0;

    /// Smallest power of two >= 16 M.
    static Eigen::Index default_points(Eigen::Index num_subcarriers);
    /// Search span defaults to the whole grid.
    static DelayGrid full(const SrsConfig& srs, Eigen::Index num_points = 0);

    double period_s() const { return 1.0 / subcarrier_spacing_hz; }
    double spacing_s() const { return period_s() / static_cast<double>(num_points); }
    double delay_s(Eigen::Index p) const { return static_cast<double>(p) * spacing_s(); }

    /// Grid points inside the search span, ascending in delay.
    std::vector<SpanPoint> span_points() const;
    void validate(Eigen::Index num_subcarriers) const;
};

struct ToaSpectrum {
    CVector amplitudes;
    DelayGrid grid;
    int iterations = 0;
    bool converged = true;
};

struct IaaSettings {
    int max_iterations = 15;
    /// Relative l-inf change of |beta| that ends the iteration.
    double convergence_tol = 1e-4;
    /// Loading added to the covariance diagonal, relative to its mean diagonal.
    double diagonal_loading = 1e-8;

    void validate() const;
};

enum class ToaImpl { Dense, Fft };

/// beta_p = a(tau_p)^H h / M via one length-P FFT.
ToaSpectrum periodogram_toa(const CVector& h, const DelayGrid& grid);

/// Reference IAA with the explicit M x P signature matrix.
ToaSpectrum iaa_dense(const CVector& h, const DelayGrid& grid, const IaaSettings& settings = {});

/// Same recursion with the covariance, numerators and Capon denominators computed by FFTs.
ToaSpectrum fft_iaa(const CVector& h, const DelayGrid& grid, const IaaSettings& settings = {});

/// FFT-IAA on the subcarriers selected by `mask`; `h_masked` holds them in ascending order.
ToaSpectrum masked_fft_iaa(const CVector& h_masked, const std::vector<bool>& mask,
                           const DelayGrid& grid, const IaaSettings& settings = {});

std::vector<ToaSpectrum> multichannel_toa(const CfrMatrix& cfr, const DelayGrid& grid,
                                          const IaaSettings& settings, ToaImpl impl);

/// Covariance sum_p power_p a_p a_p^H restricted to the first M rows and columns,
/// built from a single FFT of `power` (Hermitian Toeplitz).
CMatrix toeplitz_covariance(const RVector& power, Eigen::Index num_subcarriers);

/// xi_p = a_p^H Q a_p for all P grid points from the diagonal sums of Q.
RVector capon_denominators(const CMatrix& Q, Eigen::Index num_points);

}  // namespace jade
