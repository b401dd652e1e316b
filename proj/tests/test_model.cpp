#include "catch_amalgamated.hpp"

#include <cstring>
#include <random>

#include "jade/errors.hpp"
#include "jade/model.hpp"
#include "oracles.hpp"

using namespace jade;
using Catch::Approx;

namespace {

SrsConfig srs_with(Eigen::Index M, double df) {
    SrsConfig s;
    s.num_subcarriers = M;
    s.subcarrier_spacing_hz = df;
    return s;
}

}  // namespace

TEST_CASE("delay signature basics", "[model]") {
    const SrsConfig srs = srs_with(16, 60e3);
    const CVector a0 = delay_signature(srs, 0.0);
    for (const auto& v : a0) CHECK(v == cd(1.0, 0.0));

    const CVector a = delay_signature(srs_with(2, 60e3), 1.0 / (4.0 * 60e3));
    CHECK(a[0] == cd(1.0, 0.0));
    CHECK(std::abs(a[1] - cd(0.0, -1.0)) < 1e-15);

    CHECK(srs.unambiguous_delay_s() == Approx(16.6667e-6).epsilon(1e-4));

    const CVector b = delay_signature(srs_with(64, 60e3), 123.4e-9);
    CHECK(b[0] == cd(1.0, 0.0));
    CHECK((b.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK(oracle::max_rel_dev(b, oracle::signature(64, 60e3, 123.4e-9)) < 1e-12);
}

TEST_CASE("delay signature properties", "[model][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 5e-6);
    const SrsConfig srs = srs_with(128, 60e3);
    for (int i = 0; i < 50; ++i) {
        const double t1 = u(rng);
        const double t2 = u(rng);
        const CVector sum = delay_signature(srs, t1).cwiseProduct(delay_signature(srs, t2));
        CHECK((sum - delay_signature(srs, t1 + t2)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((delay_signature(srs, -t1) - delay_signature(srs, t1).conjugate()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("ideal steering examples", "[model]") {
    const double lambda = kSpeedOfLight / 4.85e9;
    const ArrayGeometry half = ArrayGeometry::ula(4, lambda / 2.0, lambda);
    for (const auto& v : ideal_steering(half, 0.0)) CHECK(v == cd(1.0, 0.0));

    const CVector a = ideal_steering(half, 30.0);
    for (Eigen::Index n = 0; n < 4; ++n) {
        CHECK(std::abs(a[n] - std::polar(1.0, static_cast<double>(n) * kPi / 2.0)) < 1e-12);
    }
    CHECK(a[0] == cd(1.0, 0.0));
    CHECK(0.03 / lambda == Approx(0.4853).margin(1e-4));

    const ArrayGeometry geo = ArrayGeometry::ula(4, 0.03, lambda);
    CHECK(oracle::max_rel_dev(ideal_steering(geo, 17.0), oracle::ula_steering(4, 0.03 / lambda, 17.0)) < 1e-12);
}

TEST_CASE("array geometry validation", "[model]") {
    CHECK_THROWS_AS(ArrayGeometry::ula(1, 0.03, 0.06), ConfigError);
    ArrayGeometry g{{0.0, 0.02, 0.02}, 0.06};
    CHECK_THROWS_AS(g.validate(), ConfigError);
    ArrayGeometry neg{{0.0, 0.03}, -1.0};
    CHECK_THROWS_AS(neg.validate(), ConfigError);
    SrsConfig bad = srs_with(1, 60e3);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("path validation", "[model]") {
    std::vector<PathParam> ok{{10.0, 5e-9, {1, 0}, true}, {20.0, 8e-9, {1, 0}, false}};
    CHECK_NOTHROW(validate_paths(ok));
    std::vector<PathParam> two_los{{10.0, 5e-9, {1, 0}, true}, {20.0, 8e-9, {1, 0}, true}};
    CHECK_THROWS_AS(validate_paths(two_los), ConfigError);
    std::vector<PathParam> late_los{{10.0, 9e-9, {1, 0}, true}, {20.0, 8e-9, {1, 0}, false}};
    CHECK_THROWS_AS(validate_paths(late_los), ConfigError);
}

TEST_CASE("noiseless synthesis", "[model]") {
    const SrsConfig srs = srs_with(32, 60e3);
    const double lambda = kSpeedOfLight / 4.85e9;
    const ArrayGeometry geo = ArrayGeometry::ula(4, 0.03, lambda);
    const NoiseSpec quiet{2.0, false};

    const std::vector<PathParam> single{{0.0, 0.0, {1, 0}, true}};
    const CfrMatrix ones = synthesize_cfr(srs, geo, single, SteeringModel::ideal(geo), quiet, 1);
    CHECK((ones.data.array() - cd(1.0, 0.0)).abs().maxCoeff() < 1e-15);

    const std::vector<PathParam> two{{12.0, 40e-9, {0.3, -0.8}, true}, {-35.0, 95e-9, {1.1, 0.2}, false}};
    const CfrMatrix h = synthesize_cfr(srs, geo, two, SteeringModel::ideal(geo), quiet, 1);
    const CMatrix ref = oracle::noiseless_cfr(32, 60e3, geo.element_positions_m, lambda, {12.0, -35.0},
                                              {40e-9, 95e-9}, {cd(0.3, -0.8), cd(1.1, 0.2)});
    CHECK((h.data - ref).cwiseAbs().maxCoeff() < 1e-12);

    // Linear in the path gains.
    std::vector<PathParam> scaled = two;
    const cd c(0.7, -1.9);
    for (auto& p : scaled) p.gain *= c;
    const CfrMatrix hs = synthesize_cfr(srs, geo, scaled, SteeringModel::ideal(geo), quiet, 1);
    CHECK((hs.data - c * h.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthesis rejects mismatched steering", "[model]") {
    const SrsConfig srs = srs_with(8, 60e3);
    const ArrayGeometry g4 = ArrayGeometry::ula(4, 0.03, 0.06);
    const ArrayGeometry g3 = ArrayGeometry::ula(3, 0.03, 0.06);
    const std::vector<PathParam> p{{0.0, 0.0, {1, 0}, true}};
    CHECK_THROWS_AS(synthesize_cfr(srs, g4, p, SteeringModel::ideal(g3), {}, 1), ConfigError);
    CHECK_THROWS_AS(synthesize_cfr(srs, g4, {}, SteeringModel::ideal(g4), {}, 1), ConfigError);
}

TEST_CASE("noise statistics and seeding", "[model]") {
    const SrsConfig srs = srs_with(25000, 60e3);
    const ArrayGeometry geo = ArrayGeometry::ula(4, 0.03, 0.06);
    const auto paths = snr_scale(std::vector<PathParam>{{5.0, 30e-9, {1, 0}, true}}, 3.0, 2.0);
    const SteeringModel ideal = SteeringModel::ideal(geo);
    const CfrMatrix noisy = synthesize_cfr(srs, geo, paths, ideal, {2.0, true}, 99);
    const CfrMatrix clean = synthesize_cfr(srs, geo, paths, ideal, {2.0, false}, 99);
    const CMatrix w = noisy.data - clean.data;

    const double n = static_cast<double>(w.size());
    const double mean_re = w.real().mean();
    const double var_re = (w.real().array() - mean_re).square().sum() / n;
    const double var_im = (w.imag().array() - w.imag().mean()).square().sum() / n;
    const double cov = ((w.real().array() - mean_re) * (w.imag().array() - w.imag().mean())).sum() / n;
    CHECK(std::abs(mean_re) < 0.01);
    CHECK(var_re == Approx(1.0).margin(0.02));
    CHECK(var_im == Approx(1.0).margin(0.02));
    CHECK(std::abs(cov) < 0.02);

    const double snr_emp = 10.0 * std::log10(std::norm(paths[0].gain) / (w.cwiseAbs2().sum() / n));
    CHECK(std::abs(snr_emp - 3.0) < 0.2);

    const CfrMatrix again = synthesize_cfr(srs, geo, paths, ideal, {2.0, true}, 99);
    CHECK(std::memcmp(again.data.data(), noisy.data.data(), sizeof(cd) * static_cast<std::size_t>(noisy.data.size())) == 0);
    const CfrMatrix other = synthesize_cfr(srs, geo, paths, ideal, {2.0, true}, 100);
    CHECK(!(other.data == noisy.data));
}

TEST_CASE("snr scaling", "[model]") {
    const std::vector<PathParam> p{{0.0, 0.0, {0.0, 3.0}, true}, {0.0, 1e-9, {0.0, 0.0}, false}};
    const auto s0 = snr_scale(p, 0.0, 2.0);
    CHECK(std::norm(s0[0].gain) == Approx(2.0));
    CHECK(std::arg(s0[0].gain) == Approx(kPi / 2.0));
    CHECK(std::norm(s0[1].gain) == Approx(2.0));
    const auto s1 = snr_scale(p, -10.0, 2.0);
    CHECK(std::norm(s1[0].gain) == Approx(0.2));
}

TEST_CASE("impaired steering applies the phase errors", "[model]") {
    const ArrayGeometry geo = ArrayGeometry::ula(3, 0.03, 0.06);
    PhaseErrorPolynomial poly = PhaseErrorPolynomial::zeros(3, 2);
    poly.coefficients[1] = {0.1, 0.01, 0.0};
    poly.coefficients[2] = {-0.2, 0.0, 1e-4};
    const SteeringModel imp = SteeringModel::impaired(geo, poly);
    CHECK(imp.kind() == SteeringKind::Impaired);
    const CVector a = imp(20.0);
    const CVector ideal = ideal_steering(geo, 20.0);
    CHECK(std::abs(a[1] - ideal[1] * std::polar(1.0, 0.1 + 0.2)) < 1e-12);
    CHECK(std::abs(a[2] - ideal[2] * std::polar(1.0, -0.2 + 0.04)) < 1e-12);
    CHECK((a.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(SteeringModel::impaired(geo, PhaseErrorPolynomial::zeros(2)), ConfigError);
}
