#pragma once

#include <vector>

#include "jade/doa_cbf.hpp"

namespace jade {

/// Forward spatial-frequential smoothing. The orders are the number of subblock
/// shifts along frequency and space, so the subblock is
/// (M - freq_order + 1) x (N - space_order + 1) and there are
/// freq_order * space_order snapshots.
struct SmoothingConfig {
    Eigen::Index freq_order = 6;
    Eigen::Index space_order = 2;

    Eigen::Index sub_subcarriers(Eigen::Index M) const { return M - freq_order + 1; }
    Eigen::Index sub_elements(Eigen::Index N) const { return N - space_order + 1; }
    Eigen::Index dimension(Eigen::Index M, Eigen::Index N) const { return sub_subcarriers(M) * sub_elements(N); }
    Eigen::Index snapshots() const { return freq_order * space_order; }
    void validate(Eigen::Index M, Eigen::Index N) const;
};

struct Peak2D {
    std::size_t delay_pos = 0;  // position in Spectrum2D::delays
    std::size_t angle_pos = 0;
    double delay_s = 0.0;
    double doa_deg = 0.0;
    double value = 0.0;
};

/// Power (or pseudo-power) over span delays (rows) x angles (columns).
struct Spectrum2D {
    RMatrix values;
    std::vector<SpanPoint> delays;
    std::vector<double> angles;
    std::vector<Peak2D> peaks;
};

/// 8-neighbourhood local maxima, strongest `max_peaks` kept, ordered by value.
std::vector<Peak2D> find_peaks_2d(const Spectrum2D& s, std::size_t max_peaks);

/// |vec(a_tau a_theta^T)^H vec(H)|^2 / (M N), one delay FFT per angle.
Spectrum2D periodogram_2d(const CfrMatrix& cfr, const DelayGrid& grid, const AngleGrid& angles,
                          const SteeringModel& steering, std::size_t max_peaks);

/// Forward-smoothed covariance; subvector index is n * M_s + m.
CMatrix smoothed_covariance(const CfrMatrix& cfr, const SmoothingConfig& cfg);

/// How the pseudo-spectrum denominator a^H E_n E_n^H a is evaluated. Both give the
/// same values; NoiseSubspace is the textbook O(PQ D^2) search, SignalComplement
/// uses |a|^2 - |E_s^H a|^2 and costs O(PQ D K).
inline constexpr int kAutoModelOrder = -1;

enum class MusicProjection { NoiseSubspace, SignalComplement };

struct MusicResult {
    Spectrum2D spectrum;
    RVector eigenvalues;  // ascending
    int model_order = 0;
};

/// model_order == kAutoModelOrder selects the order with MDL; 0 or >= D throws ModelOrderError.
MusicResult smoothed_music_2d(const CfrMatrix& cfr, const SmoothingConfig& cfg, const DelayGrid& grid,
                              const AngleGrid& angles, const SteeringModel& steering, int model_order,
                              MusicProjection projection = MusicProjection::SignalComplement);

/// Wax-Kailath MDL over eigenvalues (any order), clamped to [1, D-1].
int estimate_model_order(const RVector& eigenvalues, Eigen::Index snapshots);

enum class BaselineKind { Periodogram2D, SmoothedMusic };

std::string to_string(BaselineKind k);

struct BaselineConfig {
    BaselineKind kind = BaselineKind::SmoothedMusic;
    SmoothingConfig smoothing;
    /// Number of 2-D peaks kept and the MUSIC signal dimension; kAutoModelOrder uses MDL.
    int model_order = 5;
    MusicProjection projection = MusicProjection::SignalComplement;
};

/// Shares grids, detection threshold and the earliest-peak LOS rule with jade.
JadeEstimate baseline_jade_prepared(const CfrMatrix& prepared, const SteeringModel& steering,
                                    const JadeConfig& common, const BaselineConfig& cfg);

JadeEstimate baseline_jade(const CfrMatrix& cfr, const SteeringModel& steering, const JadeConfig& common,
                           const BaselineConfig& cfg);

}  // namespace jade
