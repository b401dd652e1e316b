#include "catch_amalgamated.hpp"

#include <random>

#include "jade/errors.hpp"
#include "jade/toa_iaa.hpp"
#include "oracles.hpp"

using namespace jade;
using Catch::Approx;

namespace {

DelayGrid grid_of(Eigen::Index P, double df = 60e3) {
    DelayGrid g;
    g.subcarrier_spacing_hz = df;
    g.num_points = P;
    g.search_lo_s = 0.0;
    g.search_hi_s = g.period_s();
    return g;
}

CVector multipath(Eigen::Index M, Eigen::Index P, const std::vector<double>& bins, const std::vector<cd>& gains) {
    CVector h = CVector::Zero(M);
    for (std::size_t k = 0; k < bins.size(); ++k) {
        h += gains[k] * oracle::signature(M, 1.0, bins[k] / static_cast<double>(P));
    }
    return h;
}

}  // namespace

TEST_CASE("delay grid", "[toa]") {
    CHECK(DelayGrid::default_points(64) == 1024);
    CHECK(DelayGrid::default_points(65) == 2048);
    CHECK(DelayGrid::default_points(1632) == 32768);
    SrsConfig srs;
    srs.num_subcarriers = 64;
    const DelayGrid full = DelayGrid::full(srs);
    CHECK(full.num_points == 1024);
    CHECK(full.span_points().size() == 1024);

    DelayGrid g = grid_of(100, 1e6);
    g.search_lo_s = -2.5e-8;
    g.search_hi_s = 3e-8;
    const auto pts = g.span_points();
    REQUIRE(pts.size() == 6);
    CHECK(pts.front().index == 98);
    CHECK(pts.front().delay_s == Approx(-2e-8));
    CHECK(pts.back().index == 3);
    CHECK(pts.back().delay_s == Approx(3e-8));

    CHECK_THROWS_AS(grid_of(10).validate(11), ConfigError);
}

TEST_CASE("periodogram matches the matched filter", "[toa]") {
    std::mt19937_64 rng(1);
    const CVector h = oracle::random_cvector(40, rng);
    const DelayGrid g = grid_of(128);
    const ToaSpectrum s = periodogram_toa(h, g);
    CHECK(oracle::max_rel_dev(s.amplitudes, oracle::periodogram(h, 128)) < 1e-12);
    CHECK(s.iterations == 0);
}

TEST_CASE("toeplitz covariance and capon denominators", "[toa][property]") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 5; ++i) {
        const Eigen::Index M = 12 + 5 * i;
        const Eigen::Index P = 256;
        RVector power(P);
        for (auto& p : power) p = u(rng);
        const CMatrix R = toeplitz_covariance(power, M);
        const CMatrix ref = oracle::triple_product(power, M);
        CHECK((R - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff() < 1e-10);

        const CMatrix Q = oracle::random_hermitian(M, rng);
        const RVector xi = capon_denominators(Q, P);
        const RVector xr = oracle::capon_quadratic(Q, P);
        CHECK((xi - xr).cwiseAbs().maxCoeff() / xr.cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK_THROWS_AS(capon_denominators(CMatrix::Identity(10, 10), 18), ConfigError);
}

TEST_CASE("dense and fft iaa follow the textbook recursion", "[toa]") {
    std::mt19937_64 rng(3);
    const Eigen::Index M = 16;
    const Eigen::Index P = 256;
    const IaaSettings s;
    for (int i = 0; i < 3; ++i) {
        CVector h = multipath(M, P, {20.0 + i, 31.5, 90.2}, {{1, 0}, {0.5, 0.5}, {0.0, -0.3}});
        h += 0.05 * oracle::random_cvector(M, rng);
        const auto ref = oracle::iaa(h, M, P, s.max_iterations, s.convergence_tol, s.diagonal_loading);
        const ToaSpectrum dense = iaa_dense(h, grid_of(P), s);
        const ToaSpectrum fast = fft_iaa(h, grid_of(P), s);
        CHECK(oracle::max_rel_dev(dense.amplitudes, ref.beta) < 1e-9);
        CHECK(oracle::max_rel_dev(fast.amplitudes, ref.beta) < 1e-9);
        CHECK(dense.iterations == ref.iterations);
        CHECK(fast.iterations == ref.iterations);
        CHECK(fast.iterations <= s.max_iterations);
    }
}

TEST_CASE("masked iaa", "[toa]") {
    std::mt19937_64 rng(4);
    const Eigen::Index M = 24;
    const Eigen::Index P = 256;
    const CVector h = multipath(M, P, {10.0, 40.0}, {{1, 0}, {0.7, -0.2}}) + 0.02 * oracle::random_cvector(M, rng);

    const std::vector<bool> all(static_cast<std::size_t>(M), true);
    CHECK(oracle::max_rel_dev(masked_fft_iaa(h, all, grid_of(P)).amplitudes, fft_iaa(h, grid_of(P)).amplitudes) < 1e-12);

    std::vector<bool> mask(static_cast<std::size_t>(M), true);
    std::vector<Eigen::Index> rows;
    for (std::size_t m : {3u, 4u, 9u, 15u, 16u, 17u}) mask[m] = false;
    CVector hm(M - 6);
    Eigen::Index k = 0;
    for (Eigen::Index m = 0; m < M; ++m) {
        if (mask[static_cast<std::size_t>(m)]) {
            rows.push_back(m);
            hm[k++] = h[m];
        }
    }
    const auto ref = oracle::iaa(hm, M, P, 15, 1e-4, 1e-8, rows);
    const ToaSpectrum got = masked_fft_iaa(hm, mask, grid_of(P));
    CHECK(oracle::max_rel_dev(got.amplitudes, ref.beta) < 1e-9);
    CHECK(got.iterations == ref.iterations);

    CHECK_THROWS_AS(masked_fft_iaa(h, mask, grid_of(P)), ConfigError);
    std::vector<bool> one(static_cast<std::size_t>(M), false);
    one[5] = true;
    CHECK_THROWS_AS(masked_fft_iaa(CVector::Ones(1), one, grid_of(P)), EstimationError);
}

TEST_CASE("iaa fixed point", "[toa][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> bin(0.0, 300.0);
    const Eigen::Index M = 64;
    const Eigen::Index P = 1024;
    IaaSettings s;
    s.max_iterations = 200;
    int converged = 0;
    for (int t = 0; t < 12; ++t) {
        CVector h = 0.05 * oracle::random_cvector(M, rng);
        for (int k = 0; k < 3; ++k) h += oracle::random_cvector(1, rng)[0] * oracle::signature(M, 1.0, bin(rng) / P);
        const ToaSpectrum a = fft_iaa(h, grid_of(P), s);
        if (!a.converged) continue;
        ++converged;
        IaaSettings extra = s;
        extra.max_iterations = a.iterations + 1;
        extra.convergence_tol = 1e-300;
        const ToaSpectrum b = fft_iaa(h, grid_of(P), extra);
        REQUIRE(b.iterations == a.iterations + 1);
        const double change = (b.amplitudes.cwiseAbs() - a.amplitudes.cwiseAbs()).cwiseAbs().maxCoeff() /
                              a.amplitudes.cwiseAbs().maxCoeff();
        CHECK(change < 10.0 * s.convergence_tol);
    }
    CHECK(converged >= 6);
}

TEST_CASE("iaa scale equivariance", "[toa][property]") {
    std::mt19937_64 rng(6);
    const Eigen::Index M = 32;
    const Eigen::Index P = 512;
    for (const cd c : {cd(3.0, -4.0), cd(1e-3, 0.0), cd(0.0, 250.0)}) {
        const CVector h = oracle::random_cvector(M, rng);
        const ToaSpectrum a = fft_iaa(h, grid_of(P));
        const ToaSpectrum b = fft_iaa(c * h, grid_of(P));
        CHECK(oracle::max_rel_dev(b.amplitudes, c * a.amplitudes) < 1e-9);
        CHECK(oracle::max_rel_dev(iaa_dense(c * h, grid_of(P)).amplitudes, c * iaa_dense(h, grid_of(P)).amplitudes) < 1e-9);
    }
}

TEST_CASE("off-grid path peaks within one bin", "[toa][property]") {
    const Eigen::Index M = 64;
    const Eigen::Index P = 1024;
    for (double frac : {-0.49, -0.25, 0.0, 0.3, 0.49}) {
        const double bin = 300.0 + frac;
        const CVector h = multipath(M, P, {bin}, {{0.8, 0.6}});
        for (const ToaSpectrum& s : {fft_iaa(h, grid_of(P)), periodogram_toa(h, grid_of(P))}) {
            Eigen::Index arg = 0;
            s.amplitudes.cwiseAbs().maxCoeff(&arg);
            CHECK(std::abs(static_cast<double>(arg) - std::round(bin)) <= 1.0);
        }
    }
}

TEST_CASE("iaa resolves paths the periodogram merges", "[toa]") {
    const Eigen::Index M = 64;
    const Eigen::Index P = 1024;
    // Paths 12 bins apart, below the 16-bin Rayleigh spacing.
    const CVector h = multipath(M, P, {200.0, 212.0}, {{1, 0}, {0, 1}});
    const RVector iaa = fft_iaa(h, grid_of(P)).amplitudes.cwiseAbs();
    const auto peaks = oracle::local_maxima(iaa);
    std::vector<Eigen::Index> strong;
    for (auto p : peaks) {
        if (iaa[p] > 0.3 * iaa.maxCoeff()) strong.push_back(p);
    }
    REQUIRE(strong.size() == 2);
    CHECK(std::abs(strong[0] - 200) <= 1);
    CHECK(std::abs(strong[1] - 212) <= 1);
}

TEST_CASE("iaa edge cases", "[toa]") {
    const ToaSpectrum z = fft_iaa(CVector::Zero(16), grid_of(64));
    CHECK(z.amplitudes.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(fft_iaa(CVector::Ones(16), grid_of(20)), ConfigError);
    IaaSettings bad;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(fft_iaa(CVector::Ones(16), grid_of(64), bad), ConfigError);
    bad = {};
    bad.convergence_tol = 0.0;
    CHECK_THROWS_AS(iaa_dense(CVector::Ones(16), grid_of(64), bad), ConfigError);
}

TEST_CASE("multichannel toa runs per column", "[toa]") {
    std::mt19937_64 rng(7);
    CfrMatrix cfr;
    cfr.srs.num_subcarriers = 32;
    cfr.data.resize(32, 3);
    for (Eigen::Index n = 0; n < 3; ++n) cfr.data.col(n) = oracle::random_cvector(32, rng);
    const DelayGrid g = grid_of(512);
    const auto fast = multichannel_toa(cfr, g, {}, ToaImpl::Fft);
    const auto dense = multichannel_toa(cfr, g, {}, ToaImpl::Dense);
    REQUIRE(fast.size() == 3);
    for (Eigen::Index n = 0; n < 3; ++n) {
        CHECK(oracle::max_rel_dev(fast[static_cast<std::size_t>(n)].amplitudes, fft_iaa(cfr.data.col(n), g).amplitudes) == 0.0);
        CHECK(oracle::max_rel_dev(dense[static_cast<std::size_t>(n)].amplitudes, fast[static_cast<std::size_t>(n)].amplitudes) < 1e-9);
    }
}
