#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jade/baselines.hpp"
#include "jade/calibration.hpp"
#include "jade/doa_cbf.hpp"
#include "jade/io.hpp"
#include "jade/positioning.hpp"

namespace jade {

inline constexpr int kSchemaVersion = 1;

struct ScenarioBlock {
    int min_paths = 5;
    int max_paths = 5;
    std::vector<double> snr_db{-10.0};
    int trials = 500;
    double doa_lo_deg = -60.0;
    double doa_hi_deg = 60.0;
    double toa_lo_s = 0.0;
    double toa_hi_s = 166.67e-9;
    std::uint64_t seed = 1;
    double noise_variance = 2.0;
    bool noise = true;
    /// Constant extra delay on every path (antenna range bias); never corrected.
    double common_delay_bias_s = 0.0;
    TrpPose trp;
};

struct ArrayBlock {
    Eigen::Index num_elements = 4;
    double spacing_m = 0.03;
    std::vector<double> element_positions_m;  // overrides spacing when non-empty

    ArrayGeometry geometry(double carrier_frequency_hz) const;
};

enum class SteeringChoice { Calibrated, Ideal, Truth };

struct CalibrationBlock {
    /// Synthesize an impaired array from a synthetic error profile.
    bool impair_array = true;
    std::uint64_t error_profile_seed = 7;
    double max_phase_deg = 40.0;
    /// Steering used by the estimators.
    SteeringChoice steering = SteeringChoice::Calibrated;
    int fit_order = 4;
    double measurement_step_deg = 5.0;
    double measurement_noise_deg = 1.0;
    /// Synthetic RF channel errors, divided out by calibrate_channel before estimation.
    bool rf_errors = false;
};

struct MusicBlock {
    SmoothingConfig smoothing;
    /// 0 means "use the true path count", kAutoModelOrder means MDL.
    int model_order = 0;
    MusicProjection projection = MusicProjection::NoiseSubspace;
};

struct BenchBlock {
    int runs = 50;
    int warmup = 3;
    double snr_db = -10.0;
    int num_paths = 5;
    /// Search over the whole delay grid so every pipeline covers the same P points.
    bool full_delay_span = true;
};

struct OutputBlock {
    std::filesystem::path dir = "out";
    bool dump_spectrum = false;
    bool plots = true;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    ScenarioBlock scenario;
    SrsConfig srs;
    ArrayBlock array;
    std::vector<std::string> estimators{"fft-iaa", "smoothed-music"};
    JadeConfig jade;  // grids, iaa, detection, preprocess
    bool preprocess_enabled = true;
    PreprocessConfig preprocess;
    CalibrationBlock calibration;
    MusicBlock music;
    BenchBlock bench;
    OutputBlock output;
    int workers = 1;

    /// Effective JadeConfig with preprocessing applied or cleared.
    JadeConfig pipeline() const;
    void validate() const;
};

/// Throws ConfigError with the offending field path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
Json config_to_json(const ExperimentConfig& cfg);

const std::vector<std::string>& known_estimators();

/// Counter-based seed split (splitmix64 of master and counter).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t counter);

struct ScenarioTruth {
    std::uint64_t seed = 0;
    double snr_db = 0.0;
    std::vector<PathParam> paths;

    const PathParam& los() const;
};

/// Arrays and steering models shared by every trial of an experiment.
struct ExperimentContext {
    ArrayGeometry geometry;
    PhaseErrorPolynomial true_errors;
    PhaseErrorPolynomial fitted_errors;
    SteeringModel truth_model;
    SteeringModel estimator_model;

    static ExperimentContext build(const ExperimentConfig& cfg);
};

ScenarioTruth draw_scenario(const ExperimentConfig& cfg, std::uint64_t seed, double snr_db);

/// Synthetic frequency-selective RF response, unit-ish magnitude, seeded.
RfChannelResponse synth_rf_response(Eigen::Index M, Eigen::Index N, std::uint64_t seed);

CfrMatrix synthesize_trial(const ExperimentConfig& cfg, const ExperimentContext& ctx, const ScenarioTruth& truth,
                           std::optional<RfChannelResponse>* rf_out = nullptr);

struct EstimatorOutcome {
    std::string estimator;
    bool ok = false;
    std::string error;
    JadeEstimate estimate;
    double doa_err_deg = 0.0;
    double toa_err_ns = 0.0;
    double pos_err_m = 0.0;
    std::int64_t wall_ns = 0;
};

struct TrialRecord {
    std::uint64_t trial = 0;
    ScenarioTruth truth;
    std::vector<EstimatorOutcome> outcomes;
};

/// Runs every configured estimator on one realization. Timing covers the estimator only.
/// Spectra and beam patterns are dropped unless `keep_diagnostics` is set.
TrialRecord run_trial(const ExperimentConfig& cfg, const ExperimentContext& ctx, std::uint64_t trial_id,
                      std::uint64_t seed, double snr_db, bool keep_diagnostics = false);

struct CellSummary {
    double snr_db = 0.0;
    std::string estimator;
    std::size_t failures = 0;
    ErrorStats doa;
    ErrorStats toa;
    ErrorStats pos;
    double mean_iterations = 0.0;
};

struct MonteCarloResult {
    std::vector<TrialRecord> records;  // sorted by trial id
    std::vector<CellSummary> cells;
};

MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg);

/// results.csv, trials.csv, estimates.csv, timing.csv, summary.json and plots/.
void write_monte_carlo(const MonteCarloResult& res, const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// CDF files per (snr, metric) panel and percentile-vs-SNR tables.
void emit_plot_data(const std::vector<CellSummary>& cells, const std::filesystem::path& dir,
                    const std::vector<std::string>& estimators);

struct BenchRow {
    std::string estimator;
    int runs = 0;
    double median_ms = 0.0;
    double mean_ms = 0.0;
};

std::vector<BenchRow> run_benchmark(const ExperimentConfig& cfg);
void write_benchmark(const std::vector<BenchRow>& rows, const std::filesystem::path& dir);

}  // namespace jade
