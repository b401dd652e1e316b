#include "jade/toa_iaa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jade/errors.hpp"
#include "jade/fft.hpp"

namespace jade {

Eigen::Index DelayGrid::default_points(Eigen::Index num_subcarriers) {
    Eigen::Index p = 1;
    while (p < 16 * num_subcarriers) p *= 2;
    return p;
}

DelayGrid DelayGrid::full(const SrsConfig& srs, Eigen::Index num_points) {
    DelayGrid g;
    g.subcarrier_spacing_hz = srs.subcarrier_spacing_hz;
    g.num_points = num_points > 0 ? num_points : default_points(srs.num_subcarriers);
    g.search_lo_s = 0.0;
    g.search_hi_s = g.period_s() - g.spacing_s();
    return g;
}

std::vector<SpanPoint> DelayGrid::span_points() const {
    const double step = spacing_s();
    const auto q0 = static_cast<Eigen::Index>(std::ceil(search_lo_s / step - 1e-9));
    auto q1 = static_cast<Eigen::Index>(std::floor(search_hi_s / step + 1e-9));
    q1 = std::min(q1, q0 + num_points - 1);
    std::vector<SpanPoint> out;
    out.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(q1 - q0 + 1, 0)));
    for (Eigen::Index q = q0; q <= q1; ++q) {
        out.push_back({((q % num_points) + num_points) % num_points, static_cast<double>(q) * step});
    }
    return out;
}

void DelayGrid::validate(Eigen::Index num_subcarriers) const {
    if (!(subcarrier_spacing_hz > 0.0)) {
        throw ConfigError("delay grid needs a positive subcarrier spacing");
    }
    if (num_points < num_subcarriers) {
        throw ConfigError("delay grid needs P >= M (P=" + std::to_string(num_points) +
                          ", M=" + std::to_string(num_subcarriers) + ")");
    }
    if (!(search_lo_s <= search_hi_s)) {
        throw ConfigError("delay search span must satisfy lo <= hi");
    }
}

void IaaSettings::validate() const {
    if (max_iterations < 1) throw ConfigError("iaa.max_iterations must be >= 1");
    if (!(convergence_tol > 0.0)) throw ConfigError("iaa.convergence_tol must be > 0");
    if (!(diagonal_loading >= 0.0)) throw ConfigError("iaa.diagonal_loading must be >= 0");
}

namespace {

double relative_change(const CVector& prev, const CVector& next) {
    const double peak = next.cwiseAbs().maxCoeff();
    if (peak == 0.0) return 0.0;
    return (next.cwiseAbs() - prev.cwiseAbs()).cwiseAbs().maxCoeff() / peak;
}

CMatrix loaded_inverse(CMatrix R, double loading, int iteration) {
    const double mean_diag = R.diagonal().real().mean();
    R.diagonal().array() += loading * mean_diag;
    Eigen::LLT<CMatrix> llt(R);
    if (llt.info() != Eigen::Success || !(mean_diag > 0.0)) {
        throw EstimationError("IAA covariance is not positive definite at iteration " +
                              std::to_string(iteration) + " (mean diagonal " +
                              std::to_string(mean_diag) + ")");
    }
    return llt.solve(CMatrix::Identity(R.rows(), R.cols()));
}

CMatrix toeplitz_from_column(const CVector& r, Eigen::Index M) {
    CMatrix R(M, M);
    for (Eigen::Index k = 0; k < M; ++k) {
        for (Eigen::Index i = 0; i < M; ++i) {
            R(i, k) = i >= k ? r[i - k] : std::conj(r[k - i]);
        }
    }
    return R;
}

CVector toeplitz_column(const CVector& beta, Eigen::Index M) {
    const auto P = static_cast<std::size_t>(beta.size());
    CVector power = beta.cwiseAbs2().cast<cd>();
    CVector r(static_cast<Eigen::Index>(P));
    Fft(P, FftDirection::Forward).transform({power.data(), P}, {r.data(), P});
    return r.head(M);
}

CVector backward_fft(const CVector& x, Eigen::Index P) {
    CVector out(P);
    Fft(static_cast<std::size_t>(P), FftDirection::Backward)
        .transform({x.data(), static_cast<std::size_t>(x.size())}, {out.data(), static_cast<std::size_t>(P)});
    return out;
}

void check_fft_grid(const DelayGrid& grid, Eigen::Index M) {
    grid.validate(M);
    if (grid.num_points < 2 * M - 1) {
        throw ConfigError("FFT-IAA needs P >= 2M - 1 (P=" + std::to_string(grid.num_points) + ")");
    }
}

ToaSpectrum zero_spectrum(const DelayGrid& grid) {
    ToaSpectrum s;
    s.amplitudes = CVector::Zero(grid.num_points);
    s.grid = grid;
    return s;
}

}  // namespace

CMatrix toeplitz_covariance(const RVector& power, Eigen::Index num_subcarriers) {
    const auto P = static_cast<std::size_t>(power.size());
    if (static_cast<Eigen::Index>(P) < num_subcarriers) {
        throw ConfigError("toeplitz_covariance needs at least M grid points");
    }
    CVector pc = power.cast<cd>();
    CVector r(static_cast<Eigen::Index>(P));
    Fft(P, FftDirection::Forward).transform({pc.data(), P}, {r.data(), P});
    return toeplitz_from_column(r, num_subcarriers);
}

RVector capon_denominators(const CMatrix& Q, Eigen::Index num_points) {
    const Eigen::Index M = Q.rows();
    if (num_points < 2 * M - 1) {
        throw ConfigError("capon_denominators needs P >= 2M - 1");
    }
    CVector u = CVector::Zero(num_points);
    for (Eigen::Index d = 0; d < M; ++d) {
        cd lower{0.0, 0.0};
        cd upper{0.0, 0.0};
        for (Eigen::Index k = 0; k + d < M; ++k) {
            lower += Q(k + d, k);
            upper += Q(k, k + d);
        }
        u[d] += lower;
        if (d > 0) u[num_points - d] += upper;
    }
    return backward_fft(u, num_points).real();
}

ToaSpectrum periodogram_toa(const CVector& h, const DelayGrid& grid) {
    grid.validate(h.size());
    ToaSpectrum s;
    s.grid = grid;
    s.amplitudes = backward_fft(h, grid.num_points) / static_cast<double>(h.size());
    s.iterations = 0;
    return s;
}

ToaSpectrum iaa_dense(const CVector& h, const DelayGrid& grid, const IaaSettings& settings) {
    settings.validate();
    grid.validate(h.size());
    const Eigen::Index M = h.size();
    const Eigen::Index P = grid.num_points;
    if (M < 2) throw ConfigError("IAA needs at least two subcarriers");
    if (h.isZero(0.0)) return zero_spectrum(grid);

    CVector twiddle(P);
    for (Eigen::Index k = 0; k < P; ++k) {
        twiddle[k] = std::polar(1.0, -kTwoPi * static_cast<double>(k) / static_cast<double>(P));
    }
    CMatrix A(M, P);
    for (Eigen::Index p = 0; p < P; ++p) {
        for (Eigen::Index m = 0; m < M; ++m) {
            A(m, p) = twiddle[(m * p) % P];
        }
    }

    ToaSpectrum s;
    s.grid = grid;
    s.amplitudes = A.adjoint() * h / static_cast<double>(M);
    s.converged = false;
    for (int it = 1; it <= settings.max_iterations; ++it) {
        const RVector power = s.amplitudes.cwiseAbs2();
        const CMatrix R = (A * power.asDiagonal()) * A.adjoint();
        const CMatrix Q = loaded_inverse(R, settings.diagonal_loading, it);
        const CMatrix QA = Q * A;
        const CVector num = A.adjoint() * (Q * h);
        const RVector den = (A.conjugate().cwiseProduct(QA)).colwise().sum().real().transpose();
        CVector next = num.cwiseQuotient(den.cast<cd>());
        const double change = relative_change(s.amplitudes, next);
        s.amplitudes = std::move(next);
        s.iterations = it;
        if (change < settings.convergence_tol) {
            s.converged = true;
            break;
        }
    }
    return s;
}

ToaSpectrum fft_iaa(const CVector& h, const DelayGrid& grid, const IaaSettings& settings) {
    settings.validate();
    const Eigen::Index M = h.size();
    if (M < 2) throw ConfigError("IAA needs at least two subcarriers");
    check_fft_grid(grid, M);
    const Eigen::Index P = grid.num_points;
    if (h.isZero(0.0)) return zero_spectrum(grid);

    ToaSpectrum s;
    s.grid = grid;
    s.amplitudes = backward_fft(h, P) / static_cast<double>(M);
    s.converged = false;
    for (int it = 1; it <= settings.max_iterations; ++it) {
        const CMatrix R = toeplitz_from_column(toeplitz_column(s.amplitudes, M), M);
        const CMatrix Q = loaded_inverse(R, settings.diagonal_loading, it);
        const CVector rho = backward_fft(Q * h, P);
        const RVector xi = capon_denominators(Q, P);
        CVector next = rho.cwiseQuotient(xi.cast<cd>());
        const double change = relative_change(s.amplitudes, next);
        s.amplitudes = std::move(next);
        s.iterations = it;
        if (change < settings.convergence_tol) {
            s.converged = true;
            break;
        }
    }
    return s;
}

ToaSpectrum masked_fft_iaa(const CVector& h_masked, const std::vector<bool>& mask,
                           const DelayGrid& grid, const IaaSettings& settings) {
    settings.validate();
    const auto M = static_cast<Eigen::Index>(mask.size());
    std::vector<Eigen::Index> sel;
    for (Eigen::Index m = 0; m < M; ++m) {
        if (mask[static_cast<std::size_t>(m)]) sel.push_back(m);
    }
    const auto Ms = static_cast<Eigen::Index>(sel.size());
    if (Ms != h_masked.size()) {
        throw ConfigError("masked CFR length " + std::to_string(h_masked.size()) +
                          " does not match the mask popcount " + std::to_string(Ms));
    }
    if (Ms < 2) {
        throw EstimationError("subcarrier mask keeps fewer than two subcarriers");
    }
    check_fft_grid(grid, M);
    const Eigen::Index P = grid.num_points;
    if (h_masked.isZero(0.0)) return zero_spectrum(grid);

    CVector scattered = CVector::Zero(M);
    for (Eigen::Index s = 0; s < Ms; ++s) scattered[sel[s]] = h_masked[s];

    ToaSpectrum out;
    out.grid = grid;
    out.amplitudes = backward_fft(scattered, P) / static_cast<double>(Ms);
    out.converged = false;
    for (int it = 1; it <= settings.max_iterations; ++it) {
        const CVector r = toeplitz_column(out.amplitudes, M);
        CMatrix Rs(Ms, Ms);
        for (Eigen::Index t = 0; t < Ms; ++t) {
            for (Eigen::Index s = 0; s < Ms; ++s) {
                const Eigen::Index d = sel[s] - sel[t];
                Rs(s, t) = d >= 0 ? r[d] : std::conj(r[-d]);
            }
        }
        const CMatrix Q = loaded_inverse(Rs, settings.diagonal_loading, it);

        const CVector iota = Q * h_masked;
        scattered.setZero();
        for (Eigen::Index s = 0; s < Ms; ++s) scattered[sel[s]] = iota[s];
        const CVector rho = backward_fft(scattered, P);

        CVector u = CVector::Zero(P);
        for (Eigen::Index t = 0; t < Ms; ++t) {
            for (Eigen::Index s = 0; s < Ms; ++s) {
                const Eigen::Index d = sel[s] - sel[t];
                u[d >= 0 ? d : P + d] += Q(s, t);
            }
        }
        const RVector xi = backward_fft(u, P).real();

        CVector next = rho.cwiseQuotient(xi.cast<cd>());
        const double change = relative_change(out.amplitudes, next);
        out.amplitudes = std::move(next);
        out.iterations = it;
        if (change < settings.convergence_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

std::vector<ToaSpectrum> multichannel_toa(const CfrMatrix& cfr, const DelayGrid& grid,
                                          const IaaSettings& settings, ToaImpl impl) {
    std::vector<ToaSpectrum> out;
    out.reserve(static_cast<std::size_t>(cfr.channel_count()));
    for (Eigen::Index n = 0; n < cfr.channel_count(); ++n) {
        const CVector h = cfr.data.col(n);
        out.push_back(impl == ToaImpl::Dense ? iaa_dense(h, grid, settings) : fft_iaa(h, grid, settings));
    }
    return out;
}

}  // namespace jade
