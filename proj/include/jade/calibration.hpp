#pragma once

#include <cstdint>
#include <vector>

#include "jade/array_errors.hpp"
#include "jade/model.hpp"

namespace jade {

/// Divides each CFR entry by the measured RF channel response.
/// Throws CalibrationError on |gamma| < 1e-12 and ConfigError on shape mismatch.
CfrMatrix calibrate_channel(const CfrMatrix& cfr, const RfChannelResponse& gamma);

/// Inverse of calibrate_channel: elementwise product with gamma.
CfrMatrix apply_channel_response(const CfrMatrix& cfr, const RfChannelResponse& gamma);

/// Phase error samples: column r of `phase_errors_rad` holds the N element
/// errors measured at `angles_deg[r]`.
struct AntennaErrorMeasurements {
    std::vector<double> angles_deg;
    RMatrix phase_errors_rad;

    Eigen::Index num_elements() const { return phase_errors_rad.rows(); }
    Eigen::Index num_angles() const { return phase_errors_rad.cols(); }
};

/// Least-squares polynomial fit of each element's (unwrapped) phase error
/// versus angle. Angles are mapped onto [-1, 1] for the solve and the result
/// is expanded back into powers of degrees.
PhaseErrorPolynomial fit_phase_error(const AntennaErrorMeasurements& meas, int order = 4);

/// Sum over elements and angles of squared residuals against the unwrapped measurements.
double fit_residual(const AntennaErrorMeasurements& meas, const PhaseErrorPolynomial& poly);

/// [zeta(theta)]_n = exp(j phi_n(theta)).
CVector antenna_error_fn(const PhaseErrorPolynomial& poly, double doa_deg);

/// a(theta) (.) zeta(theta).
CVector calibrated_steering(const ArrayGeometry& geometry, const PhaseErrorPolynomial& poly, double doa_deg);

/// Random smooth quartic phase errors bounded by max_phase_deg over [-60, 60]
/// degrees, growing towards the span edges. Element 0 is the zero reference.
PhaseErrorPolynomial synth_error_profile(std::uint64_t seed, double max_phase_deg = 40.0,
                                         Eigen::Index num_elements = 4);

/// Simulated chamber campaign: samples the true errors at `angles_deg`, adds
/// Gaussian phase noise and wraps into (-pi, pi].
AntennaErrorMeasurements measure_phase_errors(const PhaseErrorPolynomial& truth,
                                              const std::vector<double>& angles_deg,
                                              double noise_std_deg, std::uint64_t seed);

/// Unwraps a phase sequence so that consecutive samples differ by at most pi.
std::vector<double> unwrap_phase(const std::vector<double>& phase);

}  // namespace jade
