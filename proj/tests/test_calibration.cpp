#include "catch_amalgamated.hpp"

#include <random>

#include "jade/calibration.hpp"
#include "jade/errors.hpp"
#include "oracles.hpp"

using namespace jade;
using Catch::Approx;

namespace {

std::vector<double> angle_range(double lo, double hi, double step) {
    std::vector<double> out;
    for (double a = lo; a <= hi + 1e-9; a += step) out.push_back(a);
    return out;
}

AntennaErrorMeasurements sample_poly(const std::vector<std::vector<double>>& coeffs, const std::vector<double>& angles) {
    AntennaErrorMeasurements m;
    m.angles_deg = angles;
    m.phase_errors_rad.resize(static_cast<Eigen::Index>(coeffs.size()), static_cast<Eigen::Index>(angles.size()));
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
        for (std::size_t r = 0; r < angles.size(); ++r) {
            m.phase_errors_rad(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r)) = oracle::poly_eval(coeffs[n], angles[r]);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("channel calibration round trip", "[calibration][property]") {
    std::mt19937_64 rng(5);
    CfrMatrix cfr;
    cfr.data = CMatrix(32, 4);
    RfChannelResponse g;
    g.gamma = CMatrix(32, 4);
    for (Eigen::Index n = 0; n < 4; ++n) {
        cfr.data.col(n) = oracle::random_cvector(32, rng);
        g.gamma.col(n) = oracle::random_cvector(32, rng);
    }
    const CfrMatrix back = calibrate_channel(apply_channel_response(cfr, g), g);
    CHECK((back.data - cfr.data).cwiseAbs().maxCoeff() / cfr.data.cwiseAbs().maxCoeff() < 1e-12);

    RfChannelResponse small = g;
    small.gamma(3, 2) = 0.0;
    CHECK_THROWS_AS(calibrate_channel(cfr, small), CalibrationError);
    RfChannelResponse wrong;
    wrong.gamma = CMatrix::Ones(31, 4);
    CHECK_THROWS_AS(calibrate_channel(cfr, wrong), ConfigError);
}

TEST_CASE("phase unwrapping", "[calibration]") {
    const std::vector<double> wrapped{3.0, -3.0, -2.9, 3.1};
    const auto u = unwrap_phase(wrapped);
    CHECK(u[0] == Approx(3.0));
    CHECK(u[1] == Approx(-3.0 + 2.0 * kPi));
    CHECK(u[2] == Approx(-2.9 + 2.0 * kPi));
    CHECK(u[3] == Approx(3.1));
}

TEST_CASE("fit recovers an exact quartic", "[calibration]") {
    const std::vector<std::vector<double>> coeffs{
        {0.0, 0.0, 0.0, 0.0, 0.0},
        {0.1, -0.004, 2e-4, 1e-6, -3e-8},
        {-0.3, 0.01, -1e-4, -2e-6, 5e-8},
    };
    const auto angles = angle_range(-60.0, 60.0, 5.0);
    const PhaseErrorPolynomial p = fit_phase_error(sample_poly(coeffs, angles), 4);
    CHECK(p.order == 4);
    CHECK(p.provenance == Provenance::Fitted);
    CHECK(p.span_lo_deg == -60.0);
    CHECK(p.span_hi_deg == 60.0);
    for (std::size_t n = 0; n < 3; ++n) {
        for (double a = -60.0; a <= 60.0; a += 1.0) {
            CHECK(p.phase_rad(n, a) == Approx(oracle::poly_eval(coeffs[n], a)).margin(1e-9));
        }
    }
}

TEST_CASE("fit handles wrapped measurements", "[calibration]") {
    const std::vector<std::vector<double>> coeffs{{0.0}, {0.0, 0.1}};
    const auto angles = angle_range(-60.0, 60.0, 2.0);
    AntennaErrorMeasurements m = sample_poly(coeffs, angles);
    for (Eigen::Index r = 0; r < m.num_angles(); ++r) m.phase_errors_rad(1, r) = std::arg(std::polar(1.0, m.phase_errors_rad(1, r)));
    const PhaseErrorPolynomial p = fit_phase_error(m, 1);
    // The unwrapped sequence starts at the wrapped value of -6 rad.
    const double offset = std::arg(std::polar(1.0, -6.0)) + 6.0;
    CHECK(p.phase_rad(1, 10.0) == Approx(1.0 + offset).margin(1e-9));
    CHECK(p.coefficients[1][1] == Approx(0.1).margin(1e-9));
}

TEST_CASE("fit residual is non-increasing in order", "[calibration][property]") {
    const PhaseErrorPolynomial truth = synth_error_profile(21, 40.0, 4);
    const auto angles = angle_range(-60.0, 60.0, 5.0);
    const AntennaErrorMeasurements m = measure_phase_errors(truth, angles, 2.0, 3);
    double prev = std::numeric_limits<double>::infinity();
    for (int order = 0; order <= 8; ++order) {
        const double r = fit_residual(m, fit_phase_error(m, order));
        CHECK(r <= prev * (1.0 + 1e-9) + 1e-15);
        prev = r;
    }
}

TEST_CASE("fit input validation", "[calibration]") {
    const auto angles = angle_range(-10.0, 10.0, 10.0);
    const AntennaErrorMeasurements m = sample_poly({{0.0}, {0.1}}, angles);
    CHECK_THROWS_AS(fit_phase_error(m, 4), FitError);
    CHECK_THROWS_AS(fit_phase_error(m, -1), ConfigError);
    AntennaErrorMeasurements bad = m;
    bad.angles_deg = {0.0, -1.0, 2.0};
    CHECK_THROWS_AS(fit_phase_error(bad, 1), ConfigError);
}

TEST_CASE("calibrated steering has unit modulus", "[calibration][property]") {
    const ArrayGeometry geo = ArrayGeometry::ula(4, 0.03, kSpeedOfLight / 4.85e9);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PhaseErrorPolynomial p = synth_error_profile(seed);
        for (double a = -60.0; a <= 60.0; a += 0.5) {
            const CVector v = calibrated_steering(geo, p, a);
            CHECK((v.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("perfect calibration is a fixed point", "[calibration][property]") {
    const ArrayGeometry geo = ArrayGeometry::ula(4, 0.03, kSpeedOfLight / 4.85e9);
    const PhaseErrorPolynomial p = synth_error_profile(4);
    const SteeringModel truth = SteeringModel::impaired(geo, p);
    const SteeringModel est = SteeringModel::calibrated(geo, p);
    for (double a = -60.0; a <= 60.0; a += 0.2) {
        const cd ip = est(a).dot(truth(a));
        CHECK(std::abs(ip - cd(4.0, 0.0)) < 1e-12);
    }
}

TEST_CASE("synthetic error profiles", "[calibration]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const PhaseErrorPolynomial p = synth_error_profile(seed, 40.0, 4);
        CHECK(p.num_elements() == 4);
        CHECK(p.provenance == Provenance::Synthetic);
        double peak = 0.0;
        for (double a = -60.0; a <= 60.0; a += 0.06) {
            CHECK(p.phase_rad(0, a) == 0.0);
            for (std::size_t n = 1; n < 4; ++n) peak = std::max(peak, std::abs(p.phase_rad(n, a)));
        }
        CHECK(peak <= deg_to_rad(40.0) * (1.0 + 1e-3));
        CHECK(peak >= deg_to_rad(0.6 * 40.0) * (1.0 - 1e-3));
        // Errors are larger at the span edges than at broadside.
        double edge = 0.0;
        double centre = 0.0;
        for (std::size_t n = 1; n < 4; ++n) {
            edge = std::max({edge, std::abs(p.phase_rad(n, 60.0)), std::abs(p.phase_rad(n, -60.0))});
            centre = std::max(centre, std::abs(p.phase_rad(n, 0.0)));
        }
        CHECK(edge > centre);
    }
    const PhaseErrorPolynomial a = synth_error_profile(3);
    const PhaseErrorPolynomial b = synth_error_profile(3);
    CHECK(a.coefficients == b.coefficients);
}

TEST_CASE("measurement noise and wrapping", "[calibration]") {
    const PhaseErrorPolynomial truth = synth_error_profile(2, 170.0);
    const auto angles = angle_range(-60.0, 60.0, 5.0);
    const AntennaErrorMeasurements m = measure_phase_errors(truth, angles, 0.0, 1);
    CHECK(m.num_elements() == 4);
    CHECK(m.num_angles() == static_cast<Eigen::Index>(angles.size()));
    CHECK(m.phase_errors_rad.maxCoeff() <= kPi);
    CHECK(m.phase_errors_rad.minCoeff() > -kPi);
    const PhaseErrorPolynomial fit = fit_phase_error(m, 4);
    for (std::size_t n = 0; n < 4; ++n) {
        for (double a : angles) {
            const double d = std::remainder(fit.phase_rad(n, a) - truth.phase_rad(n, a), kTwoPi);
            CHECK(std::abs(d) < 1e-7);
        }
    }
}
