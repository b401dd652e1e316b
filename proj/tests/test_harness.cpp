#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jade/errors.hpp"
#include "jade/harness.hpp"

using namespace jade;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Configs must carry a schema version; tests add it unless they set one.
Json versioned(const char* text) {
    Json j = Json::parse(text);
    if (!j.contains("schema_version")) j["schema_version"] = kSchemaVersion;
    return j;
}

ExperimentConfig small_config() {
    return parse_config(versioned(R"({
        "schema_version": 1,
        "scenario": {"num_paths": [2, 3], "snr_db": [0, 10], "trials": 4, "seed": 5},
        "estimators": ["fft-iaa", "periodogram"],
        "output": {"plots": true}
    })"));
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "jade_test_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing", "[harness]") {
    const ExperimentConfig def = parse_config(versioned("{}"));
    CHECK(def.scenario.trials == 500);
    CHECK(def.scenario.min_paths == 5);
    CHECK(def.estimators == std::vector<std::string>{"fft-iaa", "smoothed-music"});
    CHECK(def.preprocess_enabled);
    CHECK(def.pipeline().preprocess.has_value());

    const ExperimentConfig c = parse_config(versioned(R"({
        "scenario": {"num_paths": 3, "snr_db": -5, "toa_span_ns": [0, 100], "trp": {"position_m": [1, 2], "boresight_deg": 45}},
        "srs": {"num_subcarriers": 816},
        "grids": {"delay_points": 4096, "search_ns": [0, 120], "angle": {"step_deg": 0.5}},
        "iaa": {"max_iterations": 10},
        "detection": {"threshold_db": 6},
        "preprocess": {"enabled": false},
        "music": {"model_order": "mdl", "projection": "signal-complement"},
        "calibration": {"steering": "ideal"},
        "workers": 2
    })"));
    CHECK(c.scenario.min_paths == 3);
    CHECK(c.scenario.max_paths == 3);
    CHECK(c.scenario.snr_db == std::vector<double>{-5.0});
    CHECK(c.scenario.toa_hi_s == Catch::Approx(100e-9));
    CHECK(c.scenario.trp.position_m.y() == 2.0);
    CHECK(c.scenario.trp.boresight_deg == 45.0);
    CHECK(c.srs.num_subcarriers == 816);
    CHECK(c.jade.delay_grid_points == 4096);
    CHECK(c.jade.search_hi_s == Catch::Approx(120e-9));
    CHECK(c.jade.angles.step_deg == 0.5);
    CHECK(c.jade.iaa.max_iterations == 10);
    CHECK(c.jade.threshold_db == 6.0);
    CHECK_FALSE(c.pipeline().preprocess.has_value());
    CHECK(c.music.model_order == kAutoModelOrder);
    CHECK(c.music.projection == MusicProjection::SignalComplement);
    CHECK(c.calibration.steering == SteeringChoice::Ideal);
    CHECK(c.workers == 2);

    // Round trip through the serialized form.
    const ExperimentConfig r = parse_config(config_to_json(c));
    // Unit conversions may move the last bit once; after that the form is stable.
    const Json once = config_to_json(r);
    CHECK(config_to_json(parse_config(once)) == once);
    CHECK(r.preprocess.band_guard == c.preprocess.band_guard);
    CHECK(r.estimators == c.estimators);
}

TEST_CASE("config errors name the field", "[harness]") {
    auto message = [](const char* text) {
        try {
            parse_config(versioned(text));
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"({"scenario": {"trails": 3}})").find("scenario.trails") != std::string::npos);
    CHECK(message(R"({"bogus": 1})").find("bogus") != std::string::npos);
    CHECK(message(R"({"schema_version": 2})").find("schema_version") != std::string::npos);
    try {
        parse_config(Json::object());
        FAIL("missing schema_version accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("schema_version") != std::string::npos);
    }
    CHECK(message(R"({"estimators": ["esprit"]})").find("estimators") != std::string::npos);
    CHECK(message(R"({"scenario": {"trials": "many"}})").find("scenario.trials") != std::string::npos);
    CHECK(message(R"({"music": {"model_order": 0}})").find("music.model_order") != std::string::npos);
    CHECK(message(R"({"scenario": {"num_paths": [4, 2]}})").find("scenario.num_paths") != std::string::npos);
    CHECK(message(R"({"grids": {"angle": {"min_deg": 10, "max_deg": -10}}})").find("grids.angle") != std::string::npos);
}

TEST_CASE("trial seeds", "[harness]") {
    CHECK(trial_seed(1, 0) == trial_seed(1, 0));
    CHECK(trial_seed(1, 0) != trial_seed(1, 1));
    CHECK(trial_seed(1, 0) != trial_seed(2, 0));
}

TEST_CASE("scenario draws", "[harness]") {
    const ExperimentConfig cfg = small_config();
    for (std::uint64_t s = 0; s < 50; ++s) {
        const ScenarioTruth t = draw_scenario(cfg, trial_seed(5, s), 3.0);
        CHECK(t.paths.size() >= 2);
        CHECK(t.paths.size() <= 3);
        CHECK_NOTHROW(validate_paths(t.paths));
        for (const auto& p : t.paths) {
            CHECK(p.doa_deg > -60.0);
            CHECK(p.doa_deg <= 60.0);
            CHECK(p.toa_s > 0.0);
            CHECK(p.toa_s <= 166.67e-9);
            CHECK(std::norm(p.gain) / 2.0 == Catch::Approx(std::pow(10.0, 0.3)));
        }
    }
}

TEST_CASE("noiseless single-path trial has grid-limited error", "[harness]") {
    ExperimentConfig cfg = parse_config(versioned(R"({
        "scenario": {"num_paths": 1, "snr_db": [20], "trials": 3, "noise": false},
        "calibration": {"impair_array": false, "steering": "ideal"},
        "estimators": ["fft-iaa", "iaa", "periodogram", "smoothed-music", "periodogram-2d"]
    })"));
    const ExperimentContext ctx = ExperimentContext::build(cfg);
    for (std::uint64_t t = 0; t < 3; ++t) {
        const TrialRecord r = run_trial(cfg, ctx, t, trial_seed(1, t), 20.0);
        for (const auto& o : r.outcomes) {
            INFO(o.estimator);
            REQUIRE(o.ok);
            CHECK(std::abs(o.doa_err_deg) <= 0.1 + 1e-9);
            // Half a delay grid step of the reduced CFR.
            CHECK(std::abs(o.toa_err_ns) <= 0.5 * 1e9 / (1024.0 * 1.92e6) + 1e-6);
        }
    }
}

TEST_CASE("estimators see identical inputs", "[harness][property]") {
    ExperimentConfig a = small_config();
    ExperimentConfig b = small_config();
    b.estimators = {"periodogram", "smoothed-music", "fft-iaa"};
    const ExperimentContext ctx = ExperimentContext::build(a);
    const TrialRecord ra = run_trial(a, ctx, 0, trial_seed(5, 0), 0.0);
    const TrialRecord rb = run_trial(b, ctx, 0, trial_seed(5, 0), 0.0);
    CHECK(ra.outcomes[0].estimate.doa_deg == rb.outcomes[2].estimate.doa_deg);
    CHECK(ra.outcomes[0].estimate.toa_s == rb.outcomes[2].estimate.toa_s);
    CHECK(ra.outcomes[1].estimate.toa_s == rb.outcomes[0].estimate.toa_s);
}

TEST_CASE("monte carlo output is reproducible", "[harness][property]") {
    ExperimentConfig cfg = small_config();
    const fs::path d1 = scratch("run1");
    const fs::path d2 = scratch("run2");
    write_monte_carlo(run_monte_carlo(cfg), cfg, d1);
    cfg.workers = 3;
    write_monte_carlo(run_monte_carlo(cfg), cfg, d2);
    for (const char* f : {"results.csv", "trials.csv", "estimates.csv", "plots/cdf_doa_deg_snr0.csv",
                          "plots/percentile_pos_m.csv"}) {
        INFO(f);
        REQUIRE(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    REQUIRE(fs::exists(d1 / "summary.json"));
    const Json s1 = read_json_file(d1 / "summary.json");
    Json s2 = read_json_file(d2 / "summary.json");
    CHECK(s1.at("cells") == s2.at("cells"));
    CHECK(fs::exists(d1 / "timing.csv"));

    const std::string results = slurp(d1 / "results.csv");
    CHECK(results.rfind("trial,estimator,doa_err_deg,toa_err_ns,pos_err_m\n", 0) == 0);
    CHECK(std::count(results.begin(), results.end(), '\n') == 1 + 8 * 2);
}

TEST_CASE("monte carlo summary cells", "[harness]") {
    const ExperimentConfig cfg = small_config();
    const MonteCarloResult r = run_monte_carlo(cfg);
    REQUIRE(r.records.size() == 8);
    for (std::size_t i = 0; i < r.records.size(); ++i) CHECK(r.records[i].trial == i);
    REQUIRE(r.cells.size() == 4);
    for (const auto& c : r.cells) {
        CHECK(c.doa.count == 4);
        CHECK(c.doa.p50 <= c.doa.p90);
    }
}

TEST_CASE("empty cells write headers only", "[harness]") {
    const fs::path d = scratch("empty");
    emit_plot_data({}, d, {"fft-iaa"});
    const std::string p = slurp(d / "percentile_doa_deg.csv");
    CHECK(std::count(p.begin(), p.end(), '\n') == 1);
}

TEST_CASE("benchmark rows", "[harness]") {
    ExperimentConfig cfg = parse_config(versioned(R"({
        "estimators": ["fft-iaa", "periodogram"],
        "bench": {"runs": 2, "warmup": 1}
    })"));
    const auto rows = run_benchmark(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].estimator == "fft-iaa");
    CHECK(rows[0].runs == 2);
    CHECK(rows[0].median_ms > 0.0);
    const fs::path d = scratch("bench");
    write_benchmark(rows, d);
    CHECK(slurp(d / "bench.csv").rfind("estimator,runs,median_ms,mean_ms\n", 0) == 0);
}
