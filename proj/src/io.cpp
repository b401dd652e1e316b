#include "jade/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "jade/errors.hpp"

namespace jade {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

double parse_double(const std::string& s, const fs::path& file, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(file.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    }
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    return in;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

template <typename T>
T field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(where + "." + key + ": missing");
    }
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

}  // namespace

Json to_json(const SrsConfig& srs) {
    Json j{{"carrier_frequency_hz", srs.carrier_frequency_hz},
           {"subcarrier_spacing_hz", srs.subcarrier_spacing_hz},
           {"num_subcarriers", srs.num_subcarriers}};
    if (srs.symbol_period_s) j["symbol_period_s"] = *srs.symbol_period_s;
    return j;
}

SrsConfig srs_from_json(const Json& j) {
    SrsConfig s;
    s.carrier_frequency_hz = field<double>(j, "carrier_frequency_hz", "srs");
    s.subcarrier_spacing_hz = field<double>(j, "subcarrier_spacing_hz", "srs");
    s.num_subcarriers = field<Eigen::Index>(j, "num_subcarriers", "srs");
    if (j.contains("symbol_period_s")) s.symbol_period_s = field<double>(j, "symbol_period_s", "srs");
    s.validate();
    return s;
}

Json to_json(const ArrayGeometry& geom) {
    return {{"element_positions_m", geom.element_positions_m}, {"wavelength_m", geom.wavelength_m}};
}

ArrayGeometry geometry_from_json(const Json& j) {
    ArrayGeometry g;
    g.element_positions_m = field<std::vector<double>>(j, "element_positions_m", "geometry");
    g.wavelength_m = field<double>(j, "wavelength_m", "geometry");
    g.validate();
    return g;
}

Json to_json(const PhaseErrorPolynomial& poly) {
    return {{"order", poly.order},
            {"coefficients", poly.coefficients},
            {"span", {poly.span_lo_deg, poly.span_hi_deg}},
            {"provenance", to_string(poly.provenance)}};
}

PhaseErrorPolynomial polynomial_from_json(const Json& j) {
    PhaseErrorPolynomial p;
    p.order = field<int>(j, "order", "polynomial");
    p.coefficients = field<std::vector<std::vector<double>>>(j, "coefficients", "polynomial");
    const auto span = field<std::vector<double>>(j, "span", "polynomial");
    if (span.size() != 2 || !(span[0] < span[1])) {
        throw ConfigError("polynomial.span: expected [lo, hi] with lo < hi");
    }
    p.span_lo_deg = span[0];
    p.span_hi_deg = span[1];
    if (j.contains("provenance")) {
        p.provenance = provenance_from_string(field<std::string>(j, "provenance", "polynomial"));
    }
    for (const auto& c : p.coefficients) {
        if (c.size() != static_cast<std::size_t>(p.order) + 1) {
            throw ConfigError("polynomial.coefficients: every element needs order+1 values");
        }
    }
    return p;
}

Json to_json(const JadeEstimate& est) {
    Json dets = Json::array();
    for (const auto& d : est.detections) {
        dets.push_back({{"delay_ns", (d.delay_s + est.delay_offset_s) * 1e9}, {"amp_db", d.amp_db}});
    }
    return {{"doa_deg", est.doa_deg},
            {"toa_ns", est.toa_s * 1e9},
            {"range_m", est.range_m()},
            {"n_iterations", est.iterations},
            {"detections", dets},
            {"estimator", est.estimator}};
}

fs::path cfr_sidecar_path(const fs::path& csv) {
    fs::path p = csv;
    return p.replace_extension(".json");
}

void write_cfr(const fs::path& csv, const CfrMatrix& cfr, const std::optional<ArrayGeometry>& geometry) {
    std::ofstream out = open_out(csv);
    out << "m,n,re,im\n";
    for (Eigen::Index n = 0; n < cfr.channel_count(); ++n) {
        for (Eigen::Index m = 0; m < cfr.num_subcarriers(); ++m) {
            const cd v = cfr.data(m, n);
            out << m << ',' << n << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << '\n';
        }
    }
    Json side{{"srs", to_json(cfr.srs)},
              {"num_channels", cfr.channel_count()},
              {"delay_offset_s", cfr.delay_offset_s}};
    if (cfr.band_size > 0) side["band"] = {{"first", cfr.band_first}, {"size", cfr.band_size}};
    if (geometry) side["geometry"] = to_json(*geometry);
    write_json_file(cfr_sidecar_path(csv), side);
}

CfrFile read_cfr(const fs::path& csv) {
    const Json side = read_json_file(cfr_sidecar_path(csv));
    CfrFile f;
    f.cfr.srs = srs_from_json(field<Json>(side, "srs", "sidecar"));
    const auto N = field<Eigen::Index>(side, "num_channels", "sidecar");
    f.cfr.delay_offset_s = side.value("delay_offset_s", 0.0);
    if (side.contains("geometry")) f.geometry = geometry_from_json(side["geometry"]);
    const Eigen::Index M = f.cfr.srs.num_subcarriers;
    if (N < 1) throw ConfigError("sidecar.num_channels must be >= 1");
    if (side.contains("band")) {
        const Json& b = side["band"];
        f.cfr.band_first = field<Eigen::Index>(b, "first", "sidecar.band");
        f.cfr.band_size = field<Eigen::Index>(b, "size", "sidecar.band");
        if (f.cfr.band_first < 0 || f.cfr.band_size < 1 || f.cfr.band_first + f.cfr.band_size > M) {
            throw ConfigError("sidecar.band must lie inside the subcarrier range");
        }
    }

    f.cfr.data = CMatrix::Constant(M, N, cd(std::nan(""), 0.0));
    std::ifstream in = open_in(csv);
    std::string line;
    std::getline(in, line);
    if (split_csv(line) != std::vector<std::string>{"m", "n", "re", "im"}) {
        throw ConfigError(csv.string() + ": expected header m,n,re,im");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 4) throw ConfigError(csv.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
        const double m = parse_double(cells[0], csv, lineno);
        const double n = parse_double(cells[1], csv, lineno);
        if (m < 0 || m >= static_cast<double>(M) || n < 0 || n >= static_cast<double>(N) ||
            m != std::floor(m) || n != std::floor(n)) {
            throw ConfigError(csv.string() + ":" + std::to_string(lineno) + ": index out of range");
        }
        f.cfr.data(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
            cd(parse_double(cells[2], csv, lineno), parse_double(cells[3], csv, lineno));
    }
    if (!f.cfr.data.allFinite()) {
        throw ConfigError(csv.string() + ": missing CFR entries");
    }
    if (f.geometry && f.geometry->num_elements() != N) {
        throw ConfigError("sidecar geometry does not match num_channels");
    }
    return f;
}

void write_spectrum_dump(const fs::path& csv, std::span<const ToaSpectrum> spectra, double delay_offset_s) {
    std::ofstream out = open_out(csv);
    out << "p,delay_ns,channel,re,im\n";
    for (std::size_t n = 0; n < spectra.size(); ++n) {
        const ToaSpectrum& s = spectra[n];
        for (Eigen::Index p = 0; p < s.amplitudes.size(); ++p) {
            out << p << ',' << fmt((s.grid.delay_s(p) + delay_offset_s) * 1e9) << ',' << n << ','
                << fmt(s.amplitudes[p].real()) << ',' << fmt(s.amplitudes[p].imag()) << '\n';
        }
    }
}

AntennaErrorMeasurements read_measurements(const fs::path& csv) {
    std::ifstream in = open_in(csv);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(csv.string() + ": empty file");
    const auto header = split_csv(line);
    if (header.size() < 2 || header[0] != "angle_deg") {
        throw ConfigError(csv.string() + ": expected header angle_deg,phi_1_rad,...");
    }
    const std::size_t N = header.size() - 1;
    std::vector<double> angles;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() != N + 1) {
            throw ConfigError(csv.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(N + 1) + " fields");
        }
        angles.push_back(parse_double(cells[0], csv, lineno));
        std::vector<double> r(N);
        for (std::size_t i = 0; i < N; ++i) r[i] = parse_double(cells[i + 1], csv, lineno);
        rows.push_back(std::move(r));
    }
    AntennaErrorMeasurements meas;
    meas.angles_deg = angles;
    meas.phase_errors_rad.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t i = 0; i < N; ++i) {
            meas.phase_errors_rad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = rows[r][i];
        }
    }
    return meas;
}

void write_measurements(const fs::path& csv, const AntennaErrorMeasurements& meas) {
    std::ofstream out = open_out(csv);
    out << "angle_deg";
    for (Eigen::Index n = 0; n < meas.num_elements(); ++n) out << ",phi_" << n + 1 << "_rad";
    out << '\n';
    for (Eigen::Index r = 0; r < meas.num_angles(); ++r) {
        out << fmt(meas.angles_deg[static_cast<std::size_t>(r)]);
        for (Eigen::Index n = 0; n < meas.num_elements(); ++n) out << ',' << fmt(meas.phase_errors_rad(n, r));
        out << '\n';
    }
}

Json read_json_file(const fs::path& path) {
    std::ifstream in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const Json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace jade
