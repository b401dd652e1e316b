#include "jade/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "jade/errors.hpp"

namespace jade {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

// (lo, hi] as drawn for every scenario parameter.
double uniform_left_open(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return hi - u(rng) * (hi - lo);
}

Json stats_json(const ErrorStats& s) {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    return {{"count", s.count}, {"rmse", num(s.rmse)}, {"p50", num(s.p50)}, {"p80", num(s.p80)}, {"p90", num(s.p90)}};
}

JadeEstimate run_estimator(const std::string& name, const CfrMatrix& prepared, const ExperimentConfig& cfg,
                           const ExperimentContext& ctx, const JadeConfig& pipeline, int num_paths) {
    if (name == "periodogram-2d" || name == "smoothed-music") {
        BaselineConfig b;
        b.kind = name == "smoothed-music" ? BaselineKind::SmoothedMusic : BaselineKind::Periodogram2D;
        b.smoothing = cfg.music.smoothing;
        b.model_order = cfg.music.model_order == 0 ? num_paths : cfg.music.model_order;
        if (b.kind == BaselineKind::Periodogram2D && b.model_order < 1) b.model_order = num_paths;
        b.projection = cfg.music.projection;
        return baseline_jade_prepared(prepared, ctx.estimator_model, pipeline, b);
    }
    JadeConfig j = pipeline;
    j.toa_estimator = name == "iaa"           ? ToaEstimator::DenseIaa
                      : name == "periodogram" ? ToaEstimator::Periodogram
                                              : ToaEstimator::FftIaa;
    return jade_prepared(prepared, ctx.estimator_model, j);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t counter) {
    std::uint64_t z = master + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

const PathParam& ScenarioTruth::los() const {
    for (const auto& p : paths) {
        if (p.is_los) return p;
    }
    throw ConfigError("scenario has no LOS path");
}

ExperimentContext ExperimentContext::build(const ExperimentConfig& cfg) {
    const ArrayGeometry geom = cfg.array.geometry(cfg.srs.carrier_frequency_hz);
    const auto N = static_cast<std::size_t>(geom.num_elements());
    const CalibrationBlock& c = cfg.calibration;
    PhaseErrorPolynomial truth = c.impair_array
                                     ? synth_error_profile(c.error_profile_seed, c.max_phase_deg, geom.num_elements())
                                     : PhaseErrorPolynomial::zeros(N);

    std::vector<double> angles;
    for (double a = -60.0; a <= 60.0 + 1e-9; a += c.measurement_step_deg) angles.push_back(a);
    const AntennaErrorMeasurements meas =
        measure_phase_errors(truth, angles, c.measurement_noise_deg, trial_seed(c.error_profile_seed, 0xCA1));
    PhaseErrorPolynomial fitted = fit_phase_error(meas, c.fit_order);

    SteeringModel truth_model = c.impair_array ? SteeringModel::impaired(geom, truth) : SteeringModel::ideal(geom);
    SteeringModel estimator_model = SteeringModel::ideal(geom);
    if (c.steering == SteeringChoice::Calibrated) estimator_model = SteeringModel::calibrated(geom, fitted);
    if (c.steering == SteeringChoice::Truth) estimator_model = SteeringModel::calibrated(geom, truth);
    return ExperimentContext{geom, std::move(truth), std::move(fitted), std::move(truth_model),
                             std::move(estimator_model)};
}

ScenarioTruth draw_scenario(const ExperimentConfig& cfg, std::uint64_t seed, double snr_db) {
    const ScenarioBlock& s = cfg.scenario;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(s.min_paths, s.max_paths);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    ScenarioTruth t;
    t.seed = seed;
    t.snr_db = snr_db;
    const int K = count(rng);
    for (int k = 0; k < K; ++k) {
        PathParam p;
        p.doa_deg = uniform_left_open(rng, s.doa_lo_deg, s.doa_hi_deg);
        p.toa_s = uniform_left_open(rng, s.toa_lo_s, s.toa_hi_s);
        p.gain = std::polar(1.0, phase(rng));
        t.paths.push_back(p);
    }
    auto los = std::min_element(t.paths.begin(), t.paths.end(),
                                [](const PathParam& a, const PathParam& b) { return a.toa_s < b.toa_s; });
    los->is_los = true;
    t.paths = snr_scale(t.paths, snr_db, s.noise_variance);
    return t;
}

RfChannelResponse synth_rf_response(Eigen::Index M, Eigen::Index N, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RfChannelResponse rf;
    rf.gamma.resize(M, N);
    rf.provenance = Provenance::Synthetic;
    for (Eigen::Index n = 0; n < N; ++n) {
        const double gain = 0.7 + 0.6 * u(rng);
        const double phase0 = kTwoPi * u(rng);
        const double slope = (u(rng) - 0.5) * 0.5;     // radians across the band
        const double ripple = 0.1 * u(rng);
        const double cycles = 1.0 + 3.0 * u(rng);
        const double shift = kTwoPi * u(rng);
        for (Eigen::Index m = 0; m < M; ++m) {
            const double x = static_cast<double>(m) / static_cast<double>(M);
            const double r = std::sin(kTwoPi * cycles * x + shift);
            rf.gamma(m, n) = std::polar(gain * (1.0 + ripple * r), phase0 + slope * x + 0.3 * ripple * r);
        }
    }
    return rf;
}

CfrMatrix synthesize_trial(const ExperimentConfig& cfg, const ExperimentContext& ctx, const ScenarioTruth& truth,
                           std::optional<RfChannelResponse>* rf_out) {
    std::optional<RfChannelResponse> rf;
    if (cfg.calibration.rf_errors) {
        rf = synth_rf_response(cfg.srs.num_subcarriers, ctx.geometry.num_elements(), trial_seed(truth.seed, 0x2F));
    }
    SynthesisExtras extras;
    extras.rf = rf ? &*rf : nullptr;
    extras.common_delay_bias_s = cfg.scenario.common_delay_bias_s;
    NoiseSpec noise{cfg.scenario.noise_variance, cfg.scenario.noise};
    CfrMatrix cfr = synthesize_cfr(cfg.srs, ctx.geometry, truth.paths, ctx.truth_model, noise,
                                   trial_seed(truth.seed, 0x4E), extras);
    if (rf_out != nullptr) *rf_out = std::move(rf);
    return cfr;
}

TrialRecord run_trial(const ExperimentConfig& cfg, const ExperimentContext& ctx, std::uint64_t trial_id,
                      std::uint64_t seed, double snr_db, bool keep_diagnostics) {
    TrialRecord rec;
    rec.trial = trial_id;
    rec.truth = draw_scenario(cfg, seed, snr_db);
    std::optional<RfChannelResponse> rf;
    const CfrMatrix cfr = synthesize_trial(cfg, ctx, rec.truth, &rf);

    JadeConfig pipeline = cfg.pipeline();
    pipeline.rf_calibration = rf;
    const CfrMatrix prepared = prepare_cfr(cfr, pipeline);

    const PathParam& los = rec.truth.los();
    const auto paths = static_cast<int>(rec.truth.paths.size());
    const PositionFix truth_fix = single_site_fix(cfg.scenario.trp, los.doa_deg, los.toa_s * kSpeedOfLight);

    for (const auto& name : cfg.estimators) {
        EstimatorOutcome out;
        out.estimator = name;
        const auto start = std::chrono::steady_clock::now();
        try {
            out.estimate = run_estimator(name, prepared, cfg, ctx, pipeline, paths);
            out.ok = true;
        } catch (const NumericalError& e) {
            out.ok = false;
            out.error = e.what();
        }
        out.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
        out.estimate.estimator = name;
        if (out.ok) {
            out.doa_err_deg = out.estimate.doa_deg - los.doa_deg;
            out.toa_err_ns = (out.estimate.toa_s - los.toa_s) * 1e9;
            const PositionFix fix = single_site_fix(cfg.scenario.trp, out.estimate.doa_deg,
                                                    std::max(out.estimate.range_m(), 0.0));
            out.pos_err_m = (fix.position_m - truth_fix.position_m).norm();
        } else {
            out.doa_err_deg = out.toa_err_ns = out.pos_err_m = std::nan("");
        }
        if (!keep_diagnostics) {
            out.estimate.spectra.clear();
            out.estimate.beam_spectrum.resize(0);
        }
        rec.outcomes.push_back(std::move(out));
    }
    return rec;
}

MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg) {
    cfg.validate();
    const ExperimentContext ctx = ExperimentContext::build(cfg);
    const auto trials = static_cast<std::size_t>(cfg.scenario.trials);
    const std::size_t total = trials * cfg.scenario.snr_db.size();

    MonteCarloResult res;
    res.records.resize(total);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= total) return;
            try {
                const double snr = cfg.scenario.snr_db[t / trials];
                res.records[t] = run_trial(cfg, ctx, t, trial_seed(cfg.scenario.seed, t), snr);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = total;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(total)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t cell = 0; cell < cfg.scenario.snr_db.size(); ++cell) {
        for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
            CellSummary cs;
            cs.snr_db = cfg.scenario.snr_db[cell];
            cs.estimator = cfg.estimators[e];
            std::vector<double> doa, toa, pos;
            double iters = 0.0;
            for (std::size_t i = 0; i < trials; ++i) {
                const EstimatorOutcome& o = res.records[cell * trials + i].outcomes[e];
                if (!o.ok) ++cs.failures;
                doa.push_back(o.ok ? o.doa_err_deg : kInf);
                toa.push_back(o.ok ? o.toa_err_ns : kInf);
                pos.push_back(o.ok ? o.pos_err_m : kInf);
                iters += o.estimate.iterations;
            }
            cs.doa = error_stats_from_errors(doa);
            cs.toa = error_stats_from_errors(toa);
            cs.pos = error_stats_from_errors(pos);
            cs.mean_iterations = iters / static_cast<double>(trials);
            res.cells.push_back(std::move(cs));
        }
    }
    return res;
}

void write_monte_carlo(const MonteCarloResult& res, const ExperimentConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream results = open_out(dir / "results.csv");
    std::ofstream trials = open_out(dir / "trials.csv");
    std::ofstream estimates = open_out(dir / "estimates.csv");
    std::ofstream timing = open_out(dir / "timing.csv");
    results << "trial,estimator,doa_err_deg,toa_err_ns,pos_err_m\n";
    trials << "trial,seed,snr_db,num_paths,los_doa_deg,los_toa_ns\n";
    estimates << "trial,estimator,status,doa_deg,toa_ns,range_m,n_iterations\n";
    timing << "trial,estimator,wall_ns\n";
    for (const auto& r : res.records) {
        const PathParam& los = r.truth.los();
        trials << r.trial << ',' << r.truth.seed << ',' << fmt(r.truth.snr_db) << ',' << r.truth.paths.size() << ','
               << fmt(los.doa_deg) << ',' << fmt(los.toa_s * 1e9) << '\n';
        for (const auto& o : r.outcomes) {
            results << r.trial << ',' << o.estimator << ',' << fmt(o.doa_err_deg) << ',' << fmt(o.toa_err_ns) << ','
                    << fmt(o.pos_err_m) << '\n';
            if (o.ok) {
                estimates << r.trial << ',' << o.estimator << ",ok," << fmt(o.estimate.doa_deg) << ','
                          << fmt(o.estimate.toa_s * 1e9) << ',' << fmt(o.estimate.range_m()) << ','
                          << o.estimate.iterations << '\n';
            } else {
                estimates << r.trial << ',' << o.estimator << ",failed,nan,nan,nan,0\n";
            }
            timing << r.trial << ',' << o.estimator << ',' << o.wall_ns << '\n';
        }
    }

    Json cells = Json::array();
    for (const auto& c : res.cells) {
        cells.push_back({{"snr_db", c.snr_db},
                         {"estimator", c.estimator},
                         {"failures", c.failures},
                         {"doa_deg", stats_json(c.doa)},
                         {"toa_ns", stats_json(c.toa)},
                         {"pos_m", stats_json(c.pos)},
                         {"mean_iterations", c.mean_iterations}});
    }
    const ExperimentContext ctx = ExperimentContext::build(cfg);
    Json summary{{"config", config_to_json(cfg)},
                 {"error_profile", to_json(ctx.true_errors)},
                 {"fitted_profile", to_json(ctx.fitted_errors)},
                 {"cells", cells}};
    write_json_file(dir / "summary.json", summary);
    if (cfg.output.plots) emit_plot_data(res.cells, dir / "plots", cfg.estimators);
}

void emit_plot_data(const std::vector<CellSummary>& cells, const fs::path& dir,
                    const std::vector<std::string>& estimators) {
    fs::create_directories(dir);
    struct Metric {
        const char* name;
        const ErrorStats CellSummary::*stats;
    };
    const Metric metrics[] = {{"doa_deg", &CellSummary::doa}, {"toa_ns", &CellSummary::toa}, {"pos_m", &CellSummary::pos}};
    std::vector<double> snrs;
    for (const auto& c : cells) {
        if (std::find(snrs.begin(), snrs.end(), c.snr_db) == snrs.end()) snrs.push_back(c.snr_db);
    }
    for (const auto& m : metrics) {
        std::ofstream pct = open_out(dir / (std::string("percentile_") + m.name + ".csv"));
        pct << "estimator,snr_db,p50,p80,p90\n";
        for (const auto& est : estimators) {
            for (const auto& c : cells) {
                if (c.estimator != est) continue;
                const ErrorStats& s = c.*(m.stats);
                pct << est << ',' << fmt(c.snr_db) << ',' << fmt(s.p50) << ',' << fmt(s.p80) << ',' << fmt(s.p90) << '\n';
            }
        }
        for (double snr : snrs) {
            std::ofstream cdf = open_out(dir / (std::string("cdf_") + m.name + "_snr" + label(snr) + ".csv"));
            cdf << "estimator,error,cdf\n";
            for (const auto& c : cells) {
                if (c.snr_db != snr) continue;
                for (const auto& [err, frac] : (c.*(m.stats)).cdf) {
                    cdf << c.estimator << ',' << fmt(err) << ',' << fmt(frac) << '\n';
                }
            }
        }
    }
}

std::vector<BenchRow> run_benchmark(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentConfig bench_cfg = cfg;
    bench_cfg.scenario.min_paths = bench_cfg.scenario.max_paths = cfg.bench.num_paths;
    const ExperimentContext ctx = ExperimentContext::build(bench_cfg);
    const ScenarioTruth truth = draw_scenario(bench_cfg, trial_seed(cfg.scenario.seed, 0xBE), cfg.bench.snr_db);
    const CfrMatrix cfr = synthesize_trial(bench_cfg, ctx, truth);
    JadeConfig pipeline = bench_cfg.pipeline();
    const CfrMatrix prepared = prepare_cfr(cfr, pipeline);
    if (cfg.bench.full_delay_span) {
        const DelayGrid g = DelayGrid::full(prepared.srs, pipeline.delay_grid_points);
        pipeline.search_lo_s = prepared.delay_offset_s;
        pipeline.search_hi_s = prepared.delay_offset_s + g.period_s() - g.spacing_s();
    }

    std::vector<BenchRow> rows;
    for (const auto& name : cfg.estimators) {
        auto run_once = [&] {
            try {
                return run_estimator(name, prepared, bench_cfg, ctx, pipeline, cfg.bench.num_paths).doa_deg;
            } catch (const NoPathError&) {
                return 0.0;
            }
        };
        volatile double sink = 0.0;
        for (int w = 0; w < cfg.bench.warmup; ++w) sink = sink + run_once();
        std::vector<double> ms;
        for (int r = 0; r < cfg.bench.runs; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            sink = sink + run_once();
            ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        }
        BenchRow row;
        row.estimator = name;
        row.runs = cfg.bench.runs;
        row.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
        std::sort(ms.begin(), ms.end());
        const std::size_t h = ms.size() / 2;
        row.median_ms = ms.size() % 2 ? ms[h] : 0.5 * (ms[h - 1] + ms[h]);
        rows.push_back(row);
    }
    return rows;
}

void write_benchmark(const std::vector<BenchRow>& rows, const fs::path& dir) {
    std::ofstream out = open_out(dir / "bench.csv");
    out << "estimator,runs,median_ms,mean_ms\n";
    for (const auto& r : rows) {
        out << r.estimator << ',' << r.runs << ',' << fmt(r.median_ms) << ',' << fmt(r.mean_ms) << '\n';
    }
}

}  // namespace jade
