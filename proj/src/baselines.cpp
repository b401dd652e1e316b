#include "jade/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jade/errors.hpp"
#include "jade/fft.hpp"

namespace jade {

void SmoothingConfig::validate(Eigen::Index M, Eigen::Index N) const {
    if (freq_order < 1 || freq_order > M) {
        throw ConfigError("music.freq_order must lie in [1, M]");
    }
    if (space_order < 1 || space_order > N) {
        throw ConfigError("music.space_order must lie in [1, N]");
    }
}

std::vector<Peak2D> find_peaks_2d(const Spectrum2D& s, std::size_t max_peaks) {
    const Eigen::Index D = s.values.rows();
    const Eigen::Index Q = s.values.cols();
    std::vector<Peak2D> peaks;
    for (Eigen::Index d = 0; d < D; ++d) {
        for (Eigen::Index q = 0; q < Q; ++q) {
            const double v = s.values(d, q);
            bool is_max = true;
            for (Eigen::Index dd = -1; dd <= 1 && is_max; ++dd) {
                for (Eigen::Index dq = -1; dq <= 1; ++dq) {
                    if (dd == 0 && dq == 0) continue;
                    const Eigen::Index nd = d + dd;
                    const Eigen::Index nq = q + dq;
                    if (nd < 0 || nd >= D || nq < 0 || nq >= Q) continue;
                    const double w = s.values(nd, nq);
                    const bool earlier = dd < 0 || (dd == 0 && dq < 0);
                    if (earlier ? w >= v : w > v) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            Peak2D p;
            p.delay_pos = static_cast<std::size_t>(d);
            p.angle_pos = static_cast<std::size_t>(q);
            p.delay_s = s.delays[p.delay_pos].delay_s;
            p.doa_deg = s.angles[p.angle_pos];
            p.value = v;
            peaks.push_back(p);
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak2D& a, const Peak2D& b) { return a.value > b.value; });
    if (peaks.size() > max_peaks) peaks.resize(max_peaks);
    return peaks;
}

Spectrum2D periodogram_2d(const CfrMatrix& cfr, const DelayGrid& grid, const AngleGrid& angles,
                          const SteeringModel& steering, std::size_t max_peaks) {
    const Eigen::Index M = cfr.num_subcarriers();
    const Eigen::Index N = cfr.channel_count();
    grid.validate(M);
    angles.validate();
    if (steering.num_elements() != N) {
        throw ConfigError("steering model size does not match the CFR channel count");
    }
    Spectrum2D out;
    out.delays = grid.span_points();
    out.angles = angles.angles();
    out.values.resize(static_cast<Eigen::Index>(out.delays.size()), static_cast<Eigen::Index>(out.angles.size()));

    const Fft ifft(static_cast<std::size_t>(grid.num_points), FftDirection::Backward);
    const double norm = 1.0 / static_cast<double>(M * N);
    CVector spec(grid.num_points);
    for (std::size_t q = 0; q < out.angles.size(); ++q) {
        const CVector y = cfr.data * steering(out.angles[q]).conjugate();
        ifft.transform({y.data(), static_cast<std::size_t>(M)}, {spec.data(), static_cast<std::size_t>(spec.size())});
        for (std::size_t d = 0; d < out.delays.size(); ++d) {
            out.values(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(q)) =
                std::norm(spec[out.delays[d].index]) * norm;
        }
    }
    out.peaks = find_peaks_2d(out, max_peaks);
    return out;
}

CMatrix smoothed_covariance(const CfrMatrix& cfr, const SmoothingConfig& cfg) {
    const Eigen::Index M = cfr.num_subcarriers();
    const Eigen::Index N = cfr.channel_count();
    cfg.validate(M, N);
    const Eigen::Index Ms = cfg.sub_subcarriers(M);
    const Eigen::Index Ns = cfg.sub_elements(N);
    CMatrix X(Ms * Ns, cfg.snapshots());
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < cfg.space_order; ++j) {
        for (Eigen::Index i = 0; i < cfg.freq_order; ++i, ++col) {
            for (Eigen::Index n = 0; n < Ns; ++n) {
                X.col(col).segment(n * Ms, Ms) = cfr.data.col(j + n).segment(i, Ms);
            }
        }
    }
    CMatrix R = X * X.adjoint() / static_cast<double>(cfg.snapshots());
    // Exact Hermitian symmetry regardless of GEMM rounding.
    return 0.5 * (R + R.adjoint());
}

int estimate_model_order(const RVector& eigenvalues, Eigen::Index snapshots) {
    const Eigen::Index D = eigenvalues.size();
    if (D < 2) {
        throw ModelOrderError("model order estimation needs at least two eigenvalues");
    }
    if (snapshots < 1) {
        throw ConfigError("model order estimation needs at least one snapshot");
    }
    std::vector<double> l(eigenvalues.data(), eigenvalues.data() + D);
    std::sort(l.begin(), l.end(), std::greater<>());
    const double floor_v = std::max(l.front(), 1e-300) * 1e-12;
    for (double& v : l) v = std::max(v, floor_v);

    const double S = static_cast<double>(snapshots);
    int best_k = 0;
    double best = 0.0;
    for (Eigen::Index k = 0; k < D; ++k) {
        const double tail = static_cast<double>(D - k);
        double log_sum = 0.0;
        double sum = 0.0;
        for (Eigen::Index i = k; i < D; ++i) {
            log_sum += std::log(l[static_cast<std::size_t>(i)]);
            sum += l[static_cast<std::size_t>(i)];
        }
        const double log_ratio = log_sum / tail - std::log(sum / tail);
        const double kk = static_cast<double>(k);
        const double mdl = -S * tail * log_ratio + 0.5 * kk * (2.0 * static_cast<double>(D) - kk) * std::log(S);
        if (k == 0 || mdl < best) {
            best = mdl;
            best_k = static_cast<int>(k);
        }
    }
    return std::clamp(best_k, 1, static_cast<int>(D) - 1);
}

MusicResult smoothed_music_2d(const CfrMatrix& cfr, const SmoothingConfig& cfg, const DelayGrid& grid,
                              const AngleGrid& angles, const SteeringModel& steering, int model_order,
                              MusicProjection projection) {
    const Eigen::Index M = cfr.num_subcarriers();
    const Eigen::Index N = cfr.channel_count();
    cfg.validate(M, N);
    grid.validate(M);
    angles.validate();
    if (steering.num_elements() != N) {
        throw ConfigError("steering model size does not match the CFR channel count");
    }
    const Eigen::Index Ms = cfg.sub_subcarriers(M);
    const Eigen::Index Ns = cfg.sub_elements(N);
    const Eigen::Index dim = Ms * Ns;

    const CMatrix R = smoothed_covariance(cfr, cfg);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(R);
    if (eig.info() != Eigen::Success) {
        throw EstimationError("eigendecomposition of the smoothed covariance failed");
    }
    MusicResult res;
    res.eigenvalues = eig.eigenvalues();
    int K = model_order;
    if (K == kAutoModelOrder) K = estimate_model_order(res.eigenvalues, cfg.snapshots());
    if (K < 1 || K >= dim) {
        throw ModelOrderError("MUSIC model order " + std::to_string(K) + " must lie in [1, " +
                              std::to_string(dim - 1) + "]");
    }
    res.model_order = K;
    const CMatrix En = eig.eigenvectors().leftCols(dim - K);
    const CMatrix Es = eig.eigenvectors().rightCols(K);

    Spectrum2D& out = res.spectrum;
    out.delays = grid.span_points();
    out.angles = angles.angles();
    const auto D = static_cast<Eigen::Index>(out.delays.size());
    const auto Q = static_cast<Eigen::Index>(out.angles.size());
    out.values.resize(D, Q);

    CMatrix At(Ms, D);
    for (Eigen::Index d = 0; d < D; ++d) {
        const double tau = out.delays[static_cast<std::size_t>(d)].delay_s;
        for (Eigen::Index m = 0; m < Ms; ++m) {
            At(m, d) = std::polar(1.0, -kTwoPi * static_cast<double>(m) * grid.subcarrier_spacing_hz * tau);
        }
    }
    const double floor_den = 1e-14 * static_cast<double>(dim);

    if (projection == MusicProjection::NoiseSubspace) {
        CMatrix B(dim, D);
        for (Eigen::Index q = 0; q < Q; ++q) {
            const CVector a = steering(out.angles[static_cast<std::size_t>(q)]).head(Ns);
            for (Eigen::Index n = 0; n < Ns; ++n) B.middleRows(n * Ms, Ms) = a[n] * At;
            const CMatrix V = En.adjoint() * B;
            const RVector den = V.colwise().squaredNorm().transpose();
            out.values.col(q) = den.cwiseMax(floor_den).cwiseInverse();
        }
    } else {
        // E_s^H (a_theta kron a_tau) = sum_n a_theta[n] (E_s block n)^H a_tau.
        std::vector<CMatrix> G(static_cast<std::size_t>(Ns));
        for (Eigen::Index n = 0; n < Ns; ++n) {
            G[static_cast<std::size_t>(n)] = Es.middleRows(n * Ms, Ms).adjoint() * At;
        }
        CMatrix V(K, D);
        for (Eigen::Index q = 0; q < Q; ++q) {
            const CVector a = steering(out.angles[static_cast<std::size_t>(q)]).head(Ns);
            V.setZero();
            for (Eigen::Index n = 0; n < Ns; ++n) V += a[n] * G[static_cast<std::size_t>(n)];
            const double norm_a = a.squaredNorm() * static_cast<double>(Ms);
            const RVector den = (norm_a - V.colwise().squaredNorm().array()).matrix().transpose();
            out.values.col(q) = den.cwiseMax(floor_den).cwiseInverse();
        }
    }
    out.peaks = find_peaks_2d(out, static_cast<std::size_t>(K));
    return res;
}

std::string to_string(BaselineKind k) {
    return k == BaselineKind::Periodogram2D ? "periodogram-2d" : "smoothed-music";
}

JadeEstimate baseline_jade_prepared(const CfrMatrix& prepared, const SteeringModel& steering,
                                    const JadeConfig& common, const BaselineConfig& cfg) {
    if (!(common.threshold_db > 0.0)) {
        throw ConfigError("detection threshold must be > 0 dB");
    }
    const DelayGrid grid = search_grid(prepared, common);
    Spectrum2D spec;
    if (cfg.kind == BaselineKind::Periodogram2D) {
        const int K = cfg.model_order > 0 ? cfg.model_order : 1;
        spec = periodogram_2d(prepared, grid, common.angles, steering, static_cast<std::size_t>(K));
    } else {
        spec = smoothed_music_2d(prepared, cfg.smoothing, grid, common.angles, steering, cfg.model_order,
                                 cfg.projection)
                   .spectrum;
    }

    double peak = 0.0;
    for (const auto& p : spec.peaks) peak = std::max(peak, p.value);
    std::vector<Peak2D> kept;
    if (peak > 0.0) {
        const double floor_amp = std::sqrt(peak) * std::pow(10.0, -common.threshold_db / 20.0);
        for (const auto& p : spec.peaks) {
            if (p.value > 0.0 && std::sqrt(p.value) >= floor_amp) kept.push_back(p);
        }
    }
    if (kept.empty()) {
        throw NoPathError("no 2-D peak inside the search span");
    }
    std::stable_sort(kept.begin(), kept.end(), [](const Peak2D& a, const Peak2D& b) {
        return a.delay_pos < b.delay_pos;
    });

    JadeEstimate est;
    est.estimator = to_string(cfg.kind);
    est.delay_offset_s = prepared.delay_offset_s;
    for (const auto& p : kept) {
        PathDetection d;
        d.grid_index = spec.delays[p.delay_pos].index;
        d.delay_s = p.delay_s;
        d.mean_amplitude = std::sqrt(p.value);
        d.amp_db = 10.0 * std::log10(p.value / peak);
        est.detections.push_back(std::move(d));
    }
    est.doa_deg = kept.front().doa_deg;
    est.toa_s = kept.front().delay_s + prepared.delay_offset_s;
    return est;
}

JadeEstimate baseline_jade(const CfrMatrix& cfr, const SteeringModel& steering, const JadeConfig& common,
                           const BaselineConfig& cfg) {
    return baseline_jade_prepared(prepare_cfr(cfr, common), steering, common, cfg);
}

}  // namespace jade
