#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "jade/errors.hpp"
#include "jade/harness.hpp"

namespace jade {

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can
// be reported as unknown.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const std::string where = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
        throw ConfigError((where.empty() ? std::string("<root>") : where) + ": " + msg);
    }

    const Json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (!has(key)) return;
        const Json& v = raw(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) fail(key, "expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) fail(key, "expected an integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) fail(key, "expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail(key, "expected a string");
            }
            out = v.get<T>();
        } catch (const Json::exception& e) {
            fail(key, e.what());
        }
    }

    std::pair<double, double> range(const char* key, std::pair<double, double> def) {
        if (!has(key)) return def;
        const Json& v = raw(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            fail(key, "expected [lo, hi]");
        }
        return {v[0].get<double>(), v[1].get<double>()};
    }

    Section child(const char* key) {
        return Section(raw(key), path_.empty() ? key : path_ + "." + key);
    }

    const std::string& path() const { return path_; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) fail(item.key(), "unknown key");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

SteeringChoice steering_from_string(const std::string& s, const Section& sec) {
    if (s == "calibrated") return SteeringChoice::Calibrated;
    if (s == "ideal") return SteeringChoice::Ideal;
    if (s == "truth") return SteeringChoice::Truth;
    sec.fail("steering", "expected calibrated, ideal or truth");
}

std::string to_string(SteeringChoice s) {
    switch (s) {
        case SteeringChoice::Calibrated: return "calibrated";
        case SteeringChoice::Ideal: return "ideal";
        case SteeringChoice::Truth: return "truth";
    }
    return "calibrated";
}

std::string to_string(MusicProjection p) {
    return p == MusicProjection::NoiseSubspace ? "noise-subspace" : "signal-complement";
}

void parse_scenario(Section s, ScenarioBlock& b) {
    if (s.has("num_paths")) {
        const Json& v = s.raw("num_paths");
        if (v.is_number_integer()) {
            b.min_paths = b.max_paths = v.get<int>();
        } else if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
            b.min_paths = v[0].get<int>();
            b.max_paths = v[1].get<int>();
        } else {
            s.fail("num_paths", "expected an integer or [min, max]");
        }
    }
    if (s.has("snr_db")) {
        const Json& v = s.raw("snr_db");
        b.snr_db.clear();
        if (v.is_number()) {
            b.snr_db.push_back(v.get<double>());
        } else if (v.is_array()) {
            for (const auto& x : v) {
                if (!x.is_number()) s.fail("snr_db", "expected numbers");
                b.snr_db.push_back(x.get<double>());
            }
        } else {
            s.fail("snr_db", "expected a number or a list");
        }
    }
    s.get("trials", b.trials);
    std::tie(b.doa_lo_deg, b.doa_hi_deg) = s.range("doa_span_deg", {b.doa_lo_deg, b.doa_hi_deg});
    const auto toa = s.range("toa_span_ns", {b.toa_lo_s * 1e9, b.toa_hi_s * 1e9});
    b.toa_lo_s = toa.first * 1e-9;
    b.toa_hi_s = toa.second * 1e-9;
    s.get("seed", b.seed);
    s.get("noise_variance", b.noise_variance);
    s.get("noise", b.noise);
    double bias_ns = b.common_delay_bias_s * 1e9;
    s.get("common_delay_bias_ns", bias_ns);
    b.common_delay_bias_s = bias_ns * 1e-9;
    if (s.has("trp")) {
        Section t = s.child("trp");
        const auto pos = t.range("position_m", {b.trp.position_m.x(), b.trp.position_m.y()});
        b.trp.position_m = {pos.first, pos.second};
        t.get("boresight_deg", b.trp.boresight_deg);
        t.finish();
    }
    s.finish();
}

}  // namespace

const std::vector<std::string>& known_estimators() {
    static const std::vector<std::string> names{"fft-iaa", "iaa", "periodogram", "periodogram-2d", "smoothed-music"};
    return names;
}

ArrayGeometry ArrayBlock::geometry(double carrier_frequency_hz) const {
    const double lambda = kSpeedOfLight / carrier_frequency_hz;
    if (!element_positions_m.empty()) {
        ArrayGeometry g{element_positions_m, lambda};
        g.validate();
        return g;
    }
    return ArrayGeometry::ula(num_elements, spacing_m, lambda);
}

JadeConfig ExperimentConfig::pipeline() const {
    JadeConfig j = jade;
    if (preprocess_enabled) {
        j.preprocess = preprocess;
    } else {
        j.preprocess.reset();
    }
    return j;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& where, const std::string& msg) { throw ConfigError(where + ": " + msg); };
    if (schema_version != kSchemaVersion) fail("schema_version", "unsupported version " + std::to_string(schema_version));
    const ScenarioBlock& s = scenario;
    if (s.trials < 1) fail("scenario.trials", "must be >= 1");
    if (s.min_paths < 1 || s.max_paths < s.min_paths) fail("scenario.num_paths", "need 1 <= min <= max");
    if (s.snr_db.empty()) fail("scenario.snr_db", "needs at least one value");
    for (double v : s.snr_db) {
        if (!std::isfinite(v)) fail("scenario.snr_db", "values must be finite");
    }
    if (!(s.doa_lo_deg < s.doa_hi_deg) || s.doa_lo_deg < -90.0 || s.doa_hi_deg > 90.0) {
        fail("scenario.doa_span_deg", "need -90 <= lo < hi <= 90");
    }
    if (!(s.toa_lo_s >= 0.0) || !(s.toa_lo_s < s.toa_hi_s)) fail("scenario.toa_span_ns", "need 0 <= lo < hi");
    if (!(s.noise_variance >= 0.0)) fail("scenario.noise_variance", "must be >= 0");
    if (calibration.impair_array || calibration.steering == SteeringChoice::Calibrated) {
        if (s.doa_lo_deg < -60.0 || s.doa_hi_deg > 60.0) {
            fail("scenario.doa_span_deg", "must stay inside the [-60, 60] error model span");
        }
    }
    try {
        srs.validate();
    } catch (const ConfigError& e) {
        fail("srs", e.what());
    }
    try {
        array.geometry(srs.carrier_frequency_hz).validate();
    } catch (const ConfigError& e) {
        fail("array", e.what());
    }
    if (estimators.empty()) fail("estimators", "needs at least one estimator");
    for (const auto& e : estimators) {
        if (std::find(known_estimators().begin(), known_estimators().end(), e) == known_estimators().end()) {
            fail("estimators", "unknown estimator '" + e + "'");
        }
    }
    if (jade.delay_grid_points < 0) fail("grids.delay_points", "must be >= 0");
    if (!(jade.search_lo_s <= jade.search_hi_s)) fail("grids.search_ns", "need lo <= hi");
    try {
        jade.angles.validate();
    } catch (const ConfigError& e) {
        fail("grids.angle", e.what());
    }
    try {
        jade.iaa.validate();
    } catch (const ConfigError& e) {
        fail("iaa", e.what());
    }
    if (!(jade.threshold_db > 0.0)) fail("detection.threshold_db", "must be > 0");
    if (preprocess_enabled) {
        try {
            preprocess.validate(srs);
        } catch (const ConfigError& e) {
            fail("preprocess", e.what());
        }
    }
    if (calibration.max_phase_deg < 0.0) fail("calibration.max_phase_deg", "must be >= 0");
    if (calibration.fit_order < 0) fail("calibration.fit_order", "must be >= 0");
    if (!(calibration.measurement_step_deg > 0.0)) fail("calibration.measurement_step_deg", "must be > 0");
    if (calibration.measurement_noise_deg < 0.0) fail("calibration.measurement_noise_deg", "must be >= 0");
    if (music.smoothing.freq_order < 1) fail("music.freq_order", "must be >= 1");
    if (music.smoothing.space_order < 1 || music.smoothing.space_order > array.geometry(srs.carrier_frequency_hz).num_elements()) {
        fail("music.space_order", "must lie in [1, N]");
    }
    if (music.model_order < kAutoModelOrder) fail("music.model_order", "must be \"known\", \"mdl\" or >= 1");
    if (bench.runs < 1) fail("bench.runs", "must be >= 1");
    if (bench.warmup < 0) fail("bench.warmup", "must be >= 0");
    if (bench.num_paths < 1) fail("bench.num_paths", "must be >= 1");
    if (workers < 1) fail("workers", "must be >= 1");
}

ExperimentConfig parse_config(const Json& j) {
    ExperimentConfig cfg;
    Section root(j, "");
    if (!root.has("schema_version")) root.fail("schema_version", "missing");
    root.get("schema_version", cfg.schema_version);
    if (cfg.schema_version != kSchemaVersion) {
        root.fail("schema_version", "unsupported version " + std::to_string(cfg.schema_version));
    }
    if (root.has("scenario")) parse_scenario(root.child("scenario"), cfg.scenario);
    if (root.has("srs")) {
        Section s = root.child("srs");
        s.get("carrier_frequency_hz", cfg.srs.carrier_frequency_hz);
        s.get("subcarrier_spacing_hz", cfg.srs.subcarrier_spacing_hz);
        s.get("num_subcarriers", cfg.srs.num_subcarriers);
        s.finish();
    }
    if (root.has("array")) {
        Section s = root.child("array");
        s.get("num_elements", cfg.array.num_elements);
        s.get("spacing_m", cfg.array.spacing_m);
        s.get("element_positions_m", cfg.array.element_positions_m);
        s.finish();
    }
    if (root.has("estimators")) {
        const Json& v = root.raw("estimators");
        if (!v.is_array()) root.fail("estimators", "expected a list of names");
        cfg.estimators.clear();
        for (const auto& e : v) {
            if (!e.is_string()) root.fail("estimators", "expected strings");
            cfg.estimators.push_back(e.get<std::string>());
        }
    }
    if (root.has("grids")) {
        Section s = root.child("grids");
        s.get("delay_points", cfg.jade.delay_grid_points);
        const auto span = s.range("search_ns", {cfg.jade.search_lo_s * 1e9, cfg.jade.search_hi_s * 1e9});
        cfg.jade.search_lo_s = span.first * 1e-9;
        cfg.jade.search_hi_s = span.second * 1e-9;
        if (s.has("angle")) {
            Section a = s.child("angle");
            a.get("min_deg", cfg.jade.angles.min_deg);
            a.get("max_deg", cfg.jade.angles.max_deg);
            a.get("step_deg", cfg.jade.angles.step_deg);
            a.finish();
        }
        s.finish();
    }
    if (root.has("iaa")) {
        Section s = root.child("iaa");
        s.get("max_iterations", cfg.jade.iaa.max_iterations);
        s.get("convergence_tol", cfg.jade.iaa.convergence_tol);
        s.get("diagonal_loading", cfg.jade.iaa.diagonal_loading);
        s.finish();
    }
    if (root.has("detection")) {
        Section s = root.child("detection");
        s.get("threshold_db", cfg.jade.threshold_db);
        s.get("interpolate_toa", cfg.jade.interpolate_toa);
        s.finish();
    }
    if (root.has("preprocess")) {
        Section s = root.child("preprocess");
        s.get("enabled", cfg.preprocess_enabled);
        s.get("ifft_points", cfg.preprocess.ifft_points);
        double lo = cfg.preprocess.window_lo_s * 1e9;
        double hi = cfg.preprocess.window_hi_s * 1e9;
        s.get("window_lo_ns", lo);
        s.get("window_hi_ns", hi);
        cfg.preprocess.window_lo_s = lo * 1e-9;
        cfg.preprocess.window_hi_s = hi * 1e-9;
        s.get("fft_points_out", cfg.preprocess.fft_points_out);
        s.get("band_guard", cfg.preprocess.band_guard);
        s.finish();
    }
    if (root.has("calibration")) {
        Section s = root.child("calibration");
        CalibrationBlock& c = cfg.calibration;
        s.get("impair_array", c.impair_array);
        s.get("error_profile_seed", c.error_profile_seed);
        s.get("max_phase_deg", c.max_phase_deg);
        if (s.has("steering")) {
            std::string v;
            s.get("steering", v);
            c.steering = steering_from_string(v, s);
        }
        s.get("fit_order", c.fit_order);
        s.get("measurement_step_deg", c.measurement_step_deg);
        s.get("measurement_noise_deg", c.measurement_noise_deg);
        s.get("rf_errors", c.rf_errors);
        s.finish();
    }
    if (root.has("music")) {
        Section s = root.child("music");
        s.get("freq_order", cfg.music.smoothing.freq_order);
        s.get("space_order", cfg.music.smoothing.space_order);
        if (s.has("model_order")) {
            const Json& v = s.raw("model_order");
            if (v.is_string() && v.get<std::string>() == "known") {
                cfg.music.model_order = 0;
            } else if (v.is_string() && v.get<std::string>() == "mdl") {
                cfg.music.model_order = kAutoModelOrder;
            } else if (v.is_number_integer() && v.get<int>() >= 1) {
                cfg.music.model_order = v.get<int>();
            } else {
                s.fail("model_order", "expected \"known\", \"mdl\" or an integer >= 1");
            }
        }
        if (s.has("projection")) {
            std::string v;
            s.get("projection", v);
            if (v == "noise-subspace") {
                cfg.music.projection = MusicProjection::NoiseSubspace;
            } else if (v == "signal-complement") {
                cfg.music.projection = MusicProjection::SignalComplement;
            } else {
                s.fail("projection", "expected noise-subspace or signal-complement");
            }
        }
        s.finish();
    }
    if (root.has("bench")) {
        Section s = root.child("bench");
        s.get("runs", cfg.bench.runs);
        s.get("warmup", cfg.bench.warmup);
        s.get("snr_db", cfg.bench.snr_db);
        s.get("num_paths", cfg.bench.num_paths);
        s.get("full_delay_span", cfg.bench.full_delay_span);
        s.finish();
    }
    if (root.has("output")) {
        Section s = root.child("output");
        std::string dir = cfg.output.dir.string();
        s.get("dir", dir);
        cfg.output.dir = dir;
        s.get("dump_spectrum", cfg.output.dump_spectrum);
        s.get("plots", cfg.output.plots);
        s.finish();
    }
    root.get("workers", cfg.workers);
    root.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_json_file(path));
}

Json config_to_json(const ExperimentConfig& cfg) {
    const ScenarioBlock& s = cfg.scenario;
    Json j;
    j["schema_version"] = cfg.schema_version;
    j["scenario"] = {{"num_paths", {s.min_paths, s.max_paths}},
                     {"snr_db", s.snr_db},
                     {"trials", s.trials},
                     {"doa_span_deg", {s.doa_lo_deg, s.doa_hi_deg}},
                     {"toa_span_ns", {s.toa_lo_s * 1e9, s.toa_hi_s * 1e9}},
                     {"seed", s.seed},
                     {"noise_variance", s.noise_variance},
                     {"noise", s.noise},
                     {"common_delay_bias_ns", s.common_delay_bias_s * 1e9},
                     {"trp", {{"position_m", {s.trp.position_m.x(), s.trp.position_m.y()}},
                              {"boresight_deg", s.trp.boresight_deg}}}};
    j["srs"] = {{"carrier_frequency_hz", cfg.srs.carrier_frequency_hz},
                {"subcarrier_spacing_hz", cfg.srs.subcarrier_spacing_hz},
                {"num_subcarriers", cfg.srs.num_subcarriers}};
    j["array"] = {{"num_elements", cfg.array.num_elements}, {"spacing_m", cfg.array.spacing_m}};
    if (!cfg.array.element_positions_m.empty()) j["array"]["element_positions_m"] = cfg.array.element_positions_m;
    j["estimators"] = cfg.estimators;
    j["grids"] = {{"delay_points", cfg.jade.delay_grid_points},
                  {"search_ns", {cfg.jade.search_lo_s * 1e9, cfg.jade.search_hi_s * 1e9}},
                  {"angle", {{"min_deg", cfg.jade.angles.min_deg},
                             {"max_deg", cfg.jade.angles.max_deg},
                             {"step_deg", cfg.jade.angles.step_deg}}}};
    j["iaa"] = {{"max_iterations", cfg.jade.iaa.max_iterations},
                {"convergence_tol", cfg.jade.iaa.convergence_tol},
                {"diagonal_loading", cfg.jade.iaa.diagonal_loading}};
    j["detection"] = {{"threshold_db", cfg.jade.threshold_db}, {"interpolate_toa", cfg.jade.interpolate_toa}};
    j["preprocess"] = {{"enabled", cfg.preprocess_enabled},
                       {"ifft_points", cfg.preprocess.ifft_points},
                       {"window_lo_ns", cfg.preprocess.window_lo_s * 1e9},
                       {"window_hi_ns", cfg.preprocess.window_hi_s * 1e9},
                       {"fft_points_out", cfg.preprocess.fft_points_out},
                       {"band_guard", cfg.preprocess.band_guard}};
    const CalibrationBlock& c = cfg.calibration;
    j["calibration"] = {{"impair_array", c.impair_array},
                        {"error_profile_seed", c.error_profile_seed},
                        {"max_phase_deg", c.max_phase_deg},
                        {"steering", to_string(c.steering)},
                        {"fit_order", c.fit_order},
                        {"measurement_step_deg", c.measurement_step_deg},
                        {"measurement_noise_deg", c.measurement_noise_deg},
                        {"rf_errors", c.rf_errors}};
    Json order;
    if (cfg.music.model_order == 0) {
        order = "known";
    } else if (cfg.music.model_order == kAutoModelOrder) {
        order = "mdl";
    } else {
        order = cfg.music.model_order;
    }
    j["music"] = {{"freq_order", cfg.music.smoothing.freq_order},
                  {"space_order", cfg.music.smoothing.space_order},
                  {"model_order", order},
                  {"projection", to_string(cfg.music.projection)}};
    j["bench"] = {{"runs", cfg.bench.runs},
                  {"warmup", cfg.bench.warmup},
                  {"snr_db", cfg.bench.snr_db},
                  {"num_paths", cfg.bench.num_paths},
                  {"full_delay_span", cfg.bench.full_delay_span}};
    j["output"] = {{"dir", cfg.output.dir.string()},
                   {"dump_spectrum", cfg.output.dump_spectrum},
                   {"plots", cfg.output.plots}};
    j["workers"] = cfg.workers;
    return j;
}

}  // namespace jade
