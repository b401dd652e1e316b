#include "jade/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "jade/errors.hpp"

namespace jade {

namespace {

void check_shape(const CfrMatrix& cfr, const RfChannelResponse& gamma) {
    if (gamma.gamma.rows() != cfr.data.rows() || gamma.gamma.cols() != cfr.data.cols()) {
        throw ConfigError("RF channel response is " + std::to_string(gamma.gamma.rows()) + "x" +
                          std::to_string(gamma.gamma.cols()) + ", CFR is " +
                          std::to_string(cfr.data.rows()) + "x" + std::to_string(cfr.data.cols()));
    }
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return r;
}

// Coefficients of p(x) with x = (theta - c) / h, re-expressed in powers of theta.
std::vector<double> expand_rescaled(const std::vector<double>& b, double c, double h) {
    const int order = static_cast<int>(b.size()) - 1;
    std::vector<double> g(b.size(), 0.0);
    for (int i = 0; i <= order; ++i) {
        const double scale = b[static_cast<std::size_t>(i)] / std::pow(h, i);
        for (int j = 0; j <= i; ++j) {
            g[static_cast<std::size_t>(j)] += scale * binomial(i, j) * std::pow(-c, i - j);
        }
    }
    return g;
}

double wrap_pi(double x) {
    double y = std::remainder(x, kTwoPi);
    if (y <= -kPi) y += kTwoPi;
    return y;
}

}  // namespace

CfrMatrix calibrate_channel(const CfrMatrix& cfr, const RfChannelResponse& gamma) {
    check_shape(cfr, gamma);
    if ((gamma.gamma.array().abs() < 1e-12).any() || !gamma.gamma.allFinite()) {
        throw CalibrationError("RF channel response has a zero or non-finite entry");
    }
    CfrMatrix out = cfr;
    out.data = cfr.data.cwiseQuotient(gamma.gamma);
    return out;
}

CfrMatrix apply_channel_response(const CfrMatrix& cfr, const RfChannelResponse& gamma) {
    check_shape(cfr, gamma);
    CfrMatrix out = cfr;
    out.data = cfr.data.cwiseProduct(gamma.gamma);
    return out;
}

std::vector<double> unwrap_phase(const std::vector<double>& phase) {
    std::vector<double> out(phase);
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double d = wrap_pi(phase[i] - phase[i - 1]);
        out[i] = out[i - 1] + d;
    }
    return out;
}

namespace {

void validate_measurements(const AntennaErrorMeasurements& meas, int order) {
    if (order < 0) {
        throw ConfigError("polynomial order must be non-negative");
    }
    const auto R = static_cast<std::size_t>(meas.num_angles());
    if (meas.angles_deg.size() != R) {
        throw ConfigError("angle count does not match the phase error columns");
    }
    if (R < static_cast<std::size_t>(order) + 1) {
        throw FitError("need at least order+1 angles for the fit");
    }
    for (std::size_t r = 1; r < R; ++r) {
        if (!(meas.angles_deg[r] > meas.angles_deg[r - 1])) {
            throw ConfigError("measurement angles must be strictly increasing");
        }
    }
    if (!meas.phase_errors_rad.allFinite()) {
        throw ConfigError("phase error measurements contain non-finite values");
    }
}

std::vector<double> unwrapped_row(const AntennaErrorMeasurements& meas, Eigen::Index n) {
    std::vector<double> row(static_cast<std::size_t>(meas.num_angles()));
    for (Eigen::Index r = 0; r < meas.num_angles(); ++r) {
        row[static_cast<std::size_t>(r)] = meas.phase_errors_rad(n, r);
    }
    return unwrap_phase(row);
}

}  // namespace

PhaseErrorPolynomial fit_phase_error(const AntennaErrorMeasurements& meas, int order) {
    validate_measurements(meas, order);
    const Eigen::Index R = meas.num_angles();
    const Eigen::Index I = order + 1;
    const double lo = meas.angles_deg.front();
    const double hi = meas.angles_deg.back();
    const double c = 0.5 * (lo + hi);
    const double h = R > 1 ? 0.5 * (hi - lo) : 1.0;

    RMatrix V(R, I);
    for (Eigen::Index r = 0; r < R; ++r) {
        const double x = (meas.angles_deg[static_cast<std::size_t>(r)] - c) / h;
        double xp = 1.0;
        for (Eigen::Index i = 0; i < I; ++i) {
            V(r, i) = xp;
            xp *= x;
        }
    }
    Eigen::ColPivHouseholderQR<RMatrix> qr(V);
    qr.setThreshold(1e-10);
    if (qr.rank() < I) {
        throw FitError("phase error fit is rank deficient");
    }

    PhaseErrorPolynomial poly;
    poly.order = order;
    poly.span_lo_deg = lo;
    poly.span_hi_deg = hi;
    poly.provenance = Provenance::Fitted;
    for (Eigen::Index n = 0; n < meas.num_elements(); ++n) {
        const std::vector<double> row = unwrapped_row(meas, n);
        const RVector y = Eigen::Map<const RVector>(row.data(), R);
        const RVector b = qr.solve(y);
        poly.coefficients.push_back(expand_rescaled(std::vector<double>(b.data(), b.data() + I), c, h));
    }
    return poly;
}

double fit_residual(const AntennaErrorMeasurements& meas, const PhaseErrorPolynomial& poly) {
    if (static_cast<Eigen::Index>(poly.num_elements()) != meas.num_elements()) {
        throw ConfigError("polynomial and measurements disagree on element count");
    }
    double sum = 0.0;
    for (Eigen::Index n = 0; n < meas.num_elements(); ++n) {
        const std::vector<double> row = unwrapped_row(meas, n);
        for (std::size_t r = 0; r < row.size(); ++r) {
            const double e = poly.phase_rad(static_cast<std::size_t>(n), meas.angles_deg[r]) - row[r];
            sum += e * e;
        }
    }
    return sum;
}

CVector antenna_error_fn(const PhaseErrorPolynomial& poly, double doa_deg) {
    CVector z(static_cast<Eigen::Index>(poly.num_elements()));
    for (Eigen::Index n = 0; n < z.size(); ++n) {
        z[n] = std::polar(1.0, poly.phase_rad(static_cast<std::size_t>(n), doa_deg));
    }
    return z;
}

CVector calibrated_steering(const ArrayGeometry& geometry, const PhaseErrorPolynomial& poly, double doa_deg) {
    if (static_cast<Eigen::Index>(poly.num_elements()) != geometry.num_elements()) {
        throw ConfigError("phase error polynomial count does not match the array size");
    }
    return ideal_steering(geometry, doa_deg).cwiseProduct(antenna_error_fn(poly, doa_deg));
}

PhaseErrorPolynomial synth_error_profile(std::uint64_t seed, double max_phase_deg, Eigen::Index num_elements) {
    if (max_phase_deg < 0.0) {
        throw ConfigError("max_phase_deg must be non-negative");
    }
    constexpr int kOrder = 4;
    constexpr double kHalfSpan = 60.0;
    PhaseErrorPolynomial poly = PhaseErrorPolynomial::zeros(static_cast<std::size_t>(num_elements), kOrder);
    poly.span_lo_deg = -kHalfSpan;
    poly.span_hi_deg = kHalfSpan;
    poly.provenance = Provenance::Synthetic;
    if (max_phase_deg == 0.0) {
        return poly;
    }

    // Weights in the normalized angle x = theta / 60 favour the high-order terms
    // so the error stays moderate near broadside and diverges near the edges.
    const double weights[kOrder + 1] = {0.15, 0.25, 0.35, 0.6, 0.8};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> level(0.6, 1.0);
    const double max_rad = deg_to_rad(max_phase_deg);

    for (Eigen::Index n = 1; n < num_elements; ++n) {
        std::vector<double> b(kOrder + 1);
        for (int i = 0; i <= kOrder; ++i) {
            b[static_cast<std::size_t>(i)] = weights[i] * coef(rng);
        }
        // Make sure the edges dominate: even term pushes both edges the same way.
        b[4] = std::copysign(std::max(std::abs(b[4]), 0.4), b[4]);
        double peak = 0.0;
        for (int s = 0; s <= 2000; ++s) {
            const double x = -1.0 + 2.0 * s / 2000.0;
            double v = 0.0;
            for (int i = kOrder; i >= 0; --i) v = v * x + b[static_cast<std::size_t>(i)];
            peak = std::max(peak, std::abs(v));
        }
        const double target = level(rng) * max_rad;
        for (auto& v : b) v *= target / peak;
        poly.coefficients[static_cast<std::size_t>(n)] = expand_rescaled(b, 0.0, kHalfSpan);
    }
    return poly;
}

AntennaErrorMeasurements measure_phase_errors(const PhaseErrorPolynomial& truth,
                                              const std::vector<double>& angles_deg,
                                              double noise_std_deg, std::uint64_t seed) {
    AntennaErrorMeasurements meas;
    meas.angles_deg = angles_deg;
    const auto N = static_cast<Eigen::Index>(truth.num_elements());
    const auto R = static_cast<Eigen::Index>(angles_deg.size());
    meas.phase_errors_rad.resize(N, R);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, deg_to_rad(noise_std_deg));
    for (Eigen::Index r = 0; r < R; ++r) {
        for (Eigen::Index n = 0; n < N; ++n) {
            const double v = truth.phase_rad(static_cast<std::size_t>(n), angles_deg[static_cast<std::size_t>(r)]);
            meas.phase_errors_rad(n, r) = wrap_pi(v + (noise_std_deg > 0.0 ? noise(rng) : 0.0));
        }
    }
    return meas;
}

}  // namespace jade
