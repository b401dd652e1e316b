#include "jade/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "jade/errors.hpp"

namespace jade {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Measured: return "measured";
        case Provenance::Synthetic: return "synthetic";
        case Provenance::Fitted: return "fitted";
    }
    return "synthetic";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "measured") return Provenance::Measured;
    if (s == "synthetic") return Provenance::Synthetic;
    if (s == "fitted") return Provenance::Fitted;
    throw ConfigError("unknown provenance '" + s + "'");
}

PhaseErrorPolynomial PhaseErrorPolynomial::zeros(std::size_t num_elements, int order) {
    PhaseErrorPolynomial p;
    p.order = order;
    p.coefficients.assign(num_elements, std::vector<double>(static_cast<std::size_t>(order) + 1, 0.0));
    return p;
}

double PhaseErrorPolynomial::phase_rad(std::size_t element, double doa_deg) const {
    const auto& g = coefficients.at(element);
    double acc = 0.0;
    for (auto it = g.rbegin(); it != g.rend(); ++it) {
        acc = acc * doa_deg + *it;
    }
    return acc;
}

void SrsConfig::validate() const {
    if (!(subcarrier_spacing_hz > 0.0) || !std::isfinite(subcarrier_spacing_hz)) {
        throw ConfigError("subcarrier spacing must be positive");
    }
    if (num_subcarriers < 2) {
        throw ConfigError("at least two subcarriers are required");
    }
    if (!(carrier_frequency_hz > 0.0)) {
        throw ConfigError("carrier frequency must be positive");
    }
}

ArrayGeometry ArrayGeometry::ula(Eigen::Index num_elements, double spacing_m, double wavelength_m) {
    ArrayGeometry g;
    g.wavelength_m = wavelength_m;
    g.element_positions_m.resize(static_cast<std::size_t>(std::max<Eigen::Index>(num_elements, 0)));
    for (std::size_t n = 0; n < g.element_positions_m.size(); ++n) {
        g.element_positions_m[n] = static_cast<double>(n) * spacing_m;
    }
    g.validate();
    return g;
}

ArrayGeometry ArrayGeometry::half_wavelength_ula(Eigen::Index num_elements, double carrier_frequency_hz) {
    const double lambda = kSpeedOfLight / carrier_frequency_hz;
    return ula(num_elements, 0.5 * lambda, lambda);
}

void ArrayGeometry::validate() const {
    if (element_positions_m.size() < 2) {
        throw ConfigError("array needs at least two elements");
    }
    if (!(wavelength_m > 0.0)) {
        throw ConfigError("wavelength must be positive");
    }
    if (!std::is_sorted(element_positions_m.begin(), element_positions_m.end(),
                        [](double a, double b) { return a <= b; })) {
        throw ConfigError("element positions must be strictly increasing");
    }
}

void validate_paths(std::span<const PathParam> paths) {
    if (paths.empty()) {
        throw ConfigError("scenario has no paths");
    }
    const auto los_count = std::count_if(paths.begin(), paths.end(), [](const PathParam& p) { return p.is_los; });
    if (los_count != 1) {
        throw ConfigError("exactly one LOS path is required");
    }
    const auto los = std::find_if(paths.begin(), paths.end(), [](const PathParam& p) { return p.is_los; });
    for (const auto& p : paths) {
        if (p.toa_s < los->toa_s) {
            throw ConfigError("LOS path must have the earliest TOA");
        }
        if (p.doa_deg < -90.0 || p.doa_deg > 90.0 || p.toa_s < 0.0) {
            throw ConfigError("path parameters out of range");
        }
    }
}

SteeringModel::SteeringModel(SteeringKind kind, ArrayGeometry geometry,
                             std::optional<PhaseErrorPolynomial> errors)
    : kind_(kind), geometry_(std::move(geometry)), errors_(std::move(errors)) {
    geometry_.validate();
    if (errors_ && static_cast<Eigen::Index>(errors_->num_elements()) != geometry_.num_elements()) {
        throw ConfigError("phase error polynomial count does not match the array size");
    }
}

SteeringModel SteeringModel::ideal(ArrayGeometry geometry) {
    return SteeringModel(SteeringKind::Ideal, std::move(geometry), std::nullopt);
}

SteeringModel SteeringModel::impaired(ArrayGeometry geometry, PhaseErrorPolynomial errors) {
    return SteeringModel(SteeringKind::Impaired, std::move(geometry), std::move(errors));
}

SteeringModel SteeringModel::calibrated(ArrayGeometry geometry, PhaseErrorPolynomial errors) {
    return SteeringModel(SteeringKind::Calibrated, std::move(geometry), std::move(errors));
}

CVector SteeringModel::operator()(double doa_deg) const {
    CVector a = ideal_steering(geometry_, doa_deg);
    if (errors_) {
        for (Eigen::Index n = 0; n < a.size(); ++n) {
            a[n] *= std::polar(1.0, errors_->phase_rad(static_cast<std::size_t>(n), doa_deg));
        }
    }
    return a;
}

CVector delay_signature(const SrsConfig& srs, double toa_s) {
    CVector a(srs.num_subcarriers);
    const double step = -kTwoPi * srs.subcarrier_spacing_hz * toa_s;
    for (Eigen::Index m = 0; m < a.size(); ++m) {
        a[m] = std::polar(1.0, step * static_cast<double>(m));
    }
    return a;
}

CVector ideal_steering(const ArrayGeometry& geometry, double doa_deg) {
    const Eigen::Index n_el = geometry.num_elements();
    CVector a(n_el);
    const double k = kTwoPi * std::sin(deg_to_rad(doa_deg)) / geometry.wavelength_m;
    for (Eigen::Index n = 0; n < n_el; ++n) {
        a[n] = std::polar(1.0, k * geometry.element_positions_m[static_cast<std::size_t>(n)]);
    }
    return a;
}

CfrMatrix synthesize_cfr(const SrsConfig& srs, const ArrayGeometry& geometry,
                         std::span<const PathParam> paths, const SteeringModel& steering,
                         const NoiseSpec& noise, std::uint64_t seed, const SynthesisExtras& extras) {
    srs.validate();
    geometry.validate();
    if (paths.empty()) {
        throw ConfigError("synthesize_cfr needs at least one path");
    }
    if (steering.num_elements() != geometry.num_elements()) {
        throw ConfigError("steering model and array geometry disagree on element count");
    }
    if (!(noise.variance >= 0.0)) {
        throw ConfigError("noise variance must be non-negative");
    }
    const Eigen::Index M = srs.num_subcarriers;
    const Eigen::Index N = geometry.num_elements();
    if (extras.rf && (extras.rf->gamma.rows() != M || extras.rf->gamma.cols() != N)) {
        throw ConfigError("RF channel response shape does not match the CFR");
    }

    CfrMatrix out;
    out.srs = srs;
    out.data = CMatrix::Zero(M, N);
    for (const auto& p : paths) {
        const CVector at = delay_signature(srs, p.toa_s + extras.common_delay_bias_s);
        const CVector as = steering(p.doa_deg);
        out.data.noalias() += p.gain * at * as.transpose();
    }
    if (extras.rf) {
        out.data = out.data.cwiseProduct(extras.rf->gamma);
    }
    if (noise.enabled && noise.variance > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, std::sqrt(noise.variance / 2.0));
        for (Eigen::Index n = 0; n < N; ++n) {
            for (Eigen::Index m = 0; m < M; ++m) {
                const double re = normal(rng);
                const double im = normal(rng);
                out.data(m, n) += cd(re, im);
            }
        }
    }
    return out;
}

std::vector<PathParam> snr_scale(std::span<const PathParam> paths, double snr_db, double noise_variance) {
    if (!std::isfinite(snr_db)) {
        throw ConfigError("SNR must be finite");
    }
    const double magnitude = std::sqrt(noise_variance * std::pow(10.0, snr_db / 10.0));
    std::vector<PathParam> out(paths.begin(), paths.end());
    for (auto& p : out) {
        const double phase = std::abs(p.gain) > 0.0 ? std::arg(p.gain) : 0.0;
        p.gain = std::polar(magnitude, phase);
    }
    return out;
}

}  // namespace jade
