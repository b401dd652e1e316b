#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jade/array_errors.hpp"
#include "jade/types.hpp"

namespace jade {

/// Occupied-tone layout of the sounding reference signal. The spacing is the
/// effective spacing between occupied tones (60 kHz for comb-two at 30 kHz SCS).
struct SrsConfig {
    double carrier_frequency_hz = 4.85e9;
    double subcarrier_spacing_hz = 60e3;
    Eigen::Index num_subcarriers = 1632;
    std::optional<double> symbol_period_s;

    double unambiguous_delay_s() const { return 1.0 / subcarrier_spacing_hz; }
    void validate() const;
};

/// Linear array along one axis. The reference element sits wherever position 0 is.
struct ArrayGeometry {
    std::vector<double> element_positions_m;
    double wavelength_m = kSpeedOfLight / 4.85e9;

    static ArrayGeometry ula(Eigen::Index num_elements, double spacing_m, double wavelength_m);
    static ArrayGeometry half_wavelength_ula(Eigen::Index num_elements, double carrier_frequency_hz);

    Eigen::Index num_elements() const { return static_cast<Eigen::Index>(element_positions_m.size()); }
    void validate() const;
};

struct PathParam {
    double doa_deg = 0.0;
    double toa_s = 0.0;
    cd gain{1.0, 0.0};
    bool is_los = false;
};

/// Throws ConfigError unless exactly one LOS path exists and it is the earliest.
void validate_paths(std::span<const PathParam> paths);

/// Subcarrier x channel frequency responses. `delay_offset_s` is the absolute
/// delay that corresponds to zero delay in `data` (non-zero after preprocessing).
struct CfrMatrix {
    CMatrix data;
    SrsConfig srs;
    double delay_offset_s = 0.0;
    /// Rows that carry signal after dimension reduction; band_size 0 means all.
    Eigen::Index band_first = 0;
    Eigen::Index band_size = 0;

    Eigen::Index num_subcarriers() const { return data.rows(); }
    Eigen::Index channel_count() const { return data.cols(); }
};

enum class SteeringKind { Ideal, Impaired, Calibrated };

/// DOA -> steering vector. Impaired and calibrated models both apply a phase
/// error polynomial on top of the ideal response; they differ only in intent
/// (true array vs. offline estimate of it).
class SteeringModel {
public:
    static SteeringModel ideal(ArrayGeometry geometry);
    static SteeringModel impaired(ArrayGeometry geometry, PhaseErrorPolynomial errors);
    static SteeringModel calibrated(ArrayGeometry geometry, PhaseErrorPolynomial errors);

    CVector operator()(double doa_deg) const;

    SteeringKind kind() const { return kind_; }
    const ArrayGeometry& geometry() const { return geometry_; }
    const std::optional<PhaseErrorPolynomial>& phase_errors() const { return errors_; }
    Eigen::Index num_elements() const { return geometry_.num_elements(); }

private:
    SteeringModel(SteeringKind kind, ArrayGeometry geometry, std::optional<PhaseErrorPolynomial> errors);

    SteeringKind kind_;
    ArrayGeometry geometry_;
    std::optional<PhaseErrorPolynomial> errors_;
};

/// Element m is exp(-j 2 pi m df tau), m = 0..M-1.
CVector delay_signature(const SrsConfig& srs, double toa_s);

/// Element n is exp(j 2 pi p_n sin(theta) / lambda).
CVector ideal_steering(const ArrayGeometry& geometry, double doa_deg);

/// Complex circular Gaussian noise; `variance` is the total complex variance
/// (real and imaginary parts each carry half).
struct NoiseSpec {
    double variance = 2.0;
    bool enabled = true;
};

struct SynthesisExtras {
    const RfChannelResponse* rf = nullptr;
    /// Common delay added to every path, modelling the antenna-induced range bias.
    double common_delay_bias_s = 0.0;
};

CfrMatrix synthesize_cfr(const SrsConfig& srs, const ArrayGeometry& geometry,
                         std::span<const PathParam> paths, const SteeringModel& steering,
                         const NoiseSpec& noise, std::uint64_t seed,
                         const SynthesisExtras& extras = {});

/// Sets every path magnitude so that |gamma|^2 / noise_variance = 10^(snr_db/10);
/// path phases are kept (zero-gain paths get phase 0).
std::vector<PathParam> snr_scale(std::span<const PathParam> paths, double snr_db,
                                 double noise_variance);

}  // namespace jade
