#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jade/types.hpp"

namespace jade {

enum class Provenance { Measured, Synthetic, Fitted };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// Frequency-selective, direction-independent RF channel response (M x N).
struct RfChannelResponse {
    CMatrix gamma;
    Provenance provenance = Provenance::Synthetic;
};

/// Per-element antenna phase error functions phi_n(theta) as polynomials in the
/// DOA expressed in degrees: phi_n(theta) = sum_i g[n][i] * theta^i (radians).
struct PhaseErrorPolynomial {
    int order = 4;
    std::vector<std::vector<double>> coefficients;
    double span_lo_deg = -60.0;
    double span_hi_deg = 60.0;
    Provenance provenance = Provenance::Synthetic;

    static PhaseErrorPolynomial zeros(std::size_t num_elements, int order = 4);

    std::size_t num_elements() const { return coefficients.size(); }
    double phase_rad(std::size_t element, double doa_deg) const;
    bool covers(double doa_deg) const { return doa_deg >= span_lo_deg && doa_deg <= span_hi_deg; }
};

}  // namespace jade
