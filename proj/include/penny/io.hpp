// File formats: trajectory CSV, dataset manifest, model weights, series CSV.
//
// All decimal output uses 17 significant digits (round-trip exact for
// binary64) and LF line endings.
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "penny/core.hpp"
#include "penny/diagnostics.hpp"
#include "penny/dynamics.hpp"
#include "penny/error.hpp"
#include "penny/mlp.hpp"

namespace penny::io {

namespace fs = std::filesystem;

inline constexpr std::string_view kTrajectoryHeader =
    "t,theta,phi,x,y,theta_dot,phi_dot,x_dot,y_dot";
inline constexpr std::string_view kSeriesHeader = "t,value";
inline constexpr std::string_view kWeightsMagic = "penny-mlp-weights";
inline constexpr int kWeightsVersion = 1;
inline constexpr int kManifestVersion = 1;

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::ofstream open_for_write(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline std::ifstream open_for_read(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    return in;
}

// ---------------------------------------------------------------------------
// Trajectory CSV

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << kTrajectoryHeader << '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const State& s = traj.states[k];
        const double row[] = {traj.times[k], s.q.theta,     s.q.phi,     s.q.x,     s.q.y,
                              s.v.theta_dot, s.v.phi_dot, s.v.x_dot, s.v.y_dot};
        for (std::size_t i = 0; i < std::size(row); ++i) {
            if (i != 0) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

inline Trajectory read_trajectory_csv(std::istream& in, const PennyParams& params) {
    std::string line;
    if (!std::getline(in, line) || std::string_view(line).substr(0, kTrajectoryHeader.size()) !=
                                       kTrajectoryHeader) {
        throw FormatError("trajectory CSV: missing or wrong header");
    }
    Trajectory traj;
    traj.params = params;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        if (cells.size() != 9) throw FormatError("trajectory CSV: expected 9 columns");
        double v[9];
        for (std::size_t i = 0; i < 9; ++i) v[i] = parse_double(cells[i]);
        traj.times.push_back(v[0]);
        traj.states.push_back({{v[1], v[2], v[3], v[4]}, {v[5], v[6], v[7], v[8]}});
    }
    traj.validate();
    return traj;
}

// ---------------------------------------------------------------------------
// Series CSV

inline void write_series_csv(std::ostream& out, const MomentumSeries& s) {
    out << kSeriesHeader << '\n';
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        out << format_double(s.times[k]) << ',' << format_double(s.values[k]) << '\n';
    }
}

inline MomentumSeries read_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind(kSeriesHeader, 0) != 0) {
        throw FormatError("series CSV: missing or wrong header");
    }
    MomentumSeries s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) throw FormatError("series CSV: expected 2 columns");
        s.times.push_back(parse_double(cells[0]));
        s.values.push_back(parse_double(cells[1]));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Model weights
//
//   penny-mlp-weights 1
//   dims 4 10 10 10 3
//   layer 0 weight 10 4
//   <one matrix row per line>
//   layer 0 bias 10
//   <values>
//   ...
//   end

inline void write_weights(std::ostream& out, const ModelWeights& w) {
    out << kWeightsMagic << ' ' << kWeightsVersion << '\n';
    out << "dims";
    for (std::size_t d : w.dims()) out << ' ' << d;
    out << '\n';
    for (std::size_t l = 0; l < w.layer_count(); ++l) {
        const std::size_t rows = w.outputs(l);
        const std::size_t cols = w.inputs(l);
        out << "layer " << l << " weight " << rows << ' ' << cols << '\n';
        const auto wt = w.weight(l);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                if (c != 0) out << ' ';
                out << format_double(wt[r * cols + c]);
            }
            out << '\n';
        }
        out << "layer " << l << " bias " << rows << '\n';
        const auto b = w.bias(l);
        for (std::size_t r = 0; r < rows; ++r) {
            if (r != 0) out << ' ';
            out << format_double(b[r]);
        }
        out << '\n';
    }
    out << "end\n";
}

inline ModelWeights read_weights(std::istream& in) {
    auto expect_token = [&in](std::string_view want) {
        std::string tok;
        if (!(in >> tok) || tok != want) {
            throw FormatError("weights file: expected '" + std::string(want) + "', got '" + tok +
                              "'");
        }
    };
    auto read_size = [&in]() {
        long long v = -1;
        if (!(in >> v) || v < 0) throw FormatError("weights file: expected a non-negative size");
        return static_cast<std::size_t>(v);
    };
    auto read_value = [&in]() {
        std::string tok;
        if (!(in >> tok)) throw FormatError("weights file: truncated");
        const double v = parse_double(tok);
        if (!std::isfinite(v)) throw FormatError("weights file: non-finite value");
        return v;
    };

    expect_token(kWeightsMagic);
    if (read_size() != static_cast<std::size_t>(kWeightsVersion)) {
        throw FormatError("weights file: unsupported version");
    }
    expect_token("dims");
    std::vector<std::size_t> dims;
    std::string line;
    std::getline(in, line);
    std::istringstream dims_line(line);
    for (long long d; dims_line >> d;) {
        if (d <= 0) throw FormatError("weights file: dims must be positive");
        dims.push_back(static_cast<std::size_t>(d));
    }
    if (dims.size() < 2) throw FormatError("weights file: need at least two dims");

    ModelWeights w(dims);
    for (std::size_t l = 0; l < w.layer_count(); ++l) {
        expect_token("layer");
        if (read_size() != l) throw FormatError("weights file: layers out of order");
        expect_token("weight");
        if (read_size() != w.outputs(l) || read_size() != w.inputs(l)) {
            throw FormatError("weights file: weight shape does not match dims");
        }
        for (double& v : w.weight(l)) v = read_value();
        expect_token("layer");
        if (read_size() != l) throw FormatError("weights file: layers out of order");
        expect_token("bias");
        if (read_size() != w.outputs(l)) throw FormatError("weights file: bias size mismatch");
        for (double& v : w.bias(l)) v = read_value();
    }
    expect_token("end");
    return w;
}

inline std::string weights_to_string(const ModelWeights& w) {
    std::ostringstream out;
    write_weights(out, w);
    return out.str();
}

inline void save_weights(const fs::path& path, const ModelWeights& w) {
    auto out = open_for_write(path);
    write_weights(out, w);
}

inline ModelWeights load_weights(const fs::path& path) {
    auto in = open_for_read(path);
    return read_weights(in);
}

// ---------------------------------------------------------------------------
// Dataset directory: manifest.json + one CSV per trajectory

struct DatasetManifest {
    DatasetConfig config;
    PennyParams penny;
    std::vector<TrajectoryParams> constants;
    std::vector<std::string> files;
};

inline nlohmann::json to_json(const PennyParams& p) {
    return {{"mass", p.mass},
            {"inertia_roll", p.inertia_roll},
            {"inertia_yaw", p.inertia_yaw},
            {"radius", p.radius}};
}

inline PennyParams penny_from_json(const nlohmann::json& j) {
    PennyParams p;
    p.mass = j.at("mass").get<double>();
    p.inertia_roll = j.at("inertia_roll").get<double>();
    p.inertia_yaw = j.at("inertia_yaw").get<double>();
    p.radius = j.at("radius").get<double>();
    p.validate();
    return p;
}

inline nlohmann::json to_json(const TrajectoryParams& tp) {
    return {{"rolling_rate", tp.rolling_rate}, {"spin_rate", tp.spin_rate},
            {"theta0", tp.theta0},             {"phi0", tp.phi0},
            {"x0", tp.x0},                     {"y0", tp.y0}};
}

inline TrajectoryParams trajectory_params_from_json(const nlohmann::json& j) {
    TrajectoryParams tp;
    tp.rolling_rate = j.at("rolling_rate").get<double>();
    tp.spin_rate = j.at("spin_rate").get<double>();
    tp.theta0 = j.at("theta0").get<double>();
    tp.phi0 = j.at("phi0").get<double>();
    tp.x0 = j.at("x0").get<double>();
    tp.y0 = j.at("y0").get<double>();
    return tp;
}

inline nlohmann::json to_json(const DatasetConfig& c) {
    auto range = [](const Range& r) { return nlohmann::json::array({r.lo, r.hi}); };
    return {{"n_trajectories", c.n_trajectories},
            {"t_end", c.t_end},
            {"dt", c.dt},
            {"radius", c.radius},
            {"rolling_rate_magnitude", range(c.rolling_rate_magnitude)},
            {"spin_rate_magnitude", range(c.spin_rate_magnitude)},
            {"theta0", range(c.theta0)},
            {"phi0", range(c.phi0)},
            {"x0", range(c.x0)},
            {"y0", range(c.y0)},
            {"seed", c.seed}};
}

inline DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
    auto range = [](const nlohmann::json& a) {
        return Range{a.at(0).get<double>(), a.at(1).get<double>()};
    };
    DatasetConfig c;
    c.n_trajectories = j.at("n_trajectories").get<std::size_t>();
    c.t_end = j.at("t_end").get<double>();
    c.dt = j.at("dt").get<double>();
    c.radius = j.at("radius").get<double>();
    c.rolling_rate_magnitude = range(j.at("rolling_rate_magnitude"));
    c.spin_rate_magnitude = range(j.at("spin_rate_magnitude"));
    c.theta0 = range(j.at("theta0"));
    c.phi0 = range(j.at("phi0"));
    c.x0 = range(j.at("x0"));
    c.y0 = range(j.at("y0"));
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline std::string trajectory_file_name(std::size_t index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "traj_" + digits + ".csv";
}

/// Writes manifest.json and traj_NNNN.csv files into `dir` (created if
/// needed) and returns the manifest.
inline DatasetManifest write_dataset(const fs::path& dir, const DatasetConfig& cfg,
                                     const PennyParams& penny,
                                     const std::vector<Trajectory>& trajectories) {
    fs::create_directories(dir);
    DatasetManifest m;
    m.config = cfg;
    m.penny = penny;
    m.penny.radius = cfg.radius;
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const std::string name = trajectory_file_name(i);
        auto out = open_for_write(dir / name);
        write_trajectory_csv(out, trajectories[i]);
        if (!out) throw std::runtime_error("write failed: " + (dir / name).string());
        const TrajectoryParams tp = trajectories[i].constants.value_or(TrajectoryParams{});
        m.constants.push_back(tp);
        m.files.push_back(name);
        entries.push_back({{"file", name},
                           {"samples", trajectories[i].size()},
                           {"params", to_json(tp)}});
    }
    const nlohmann::json doc = {{"format", "penny-dataset"},
                                {"version", kManifestVersion},
                                {"seed", cfg.seed},
                                {"rng", "mt19937_64, splitmix64 substreams"},
                                {"penny", to_json(m.penny)},
                                {"config", to_json(cfg)},
                                {"trajectories", entries}};
    auto out = open_for_write(dir / "manifest.json");
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (dir / "manifest.json").string());
    return m;
}

inline DatasetManifest read_manifest(const fs::path& dir) {
    auto in = open_for_read(dir / "manifest.json");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
        if (doc.at("format").get<std::string>() != "penny-dataset") {
            throw FormatError("manifest: not a penny dataset");
        }
        if (doc.at("version").get<int>() != kManifestVersion) {
            throw FormatError("manifest: unsupported version");
        }
        DatasetManifest m;
        m.penny = penny_from_json(doc.at("penny"));
        m.config = dataset_config_from_json(doc.at("config"));
        for (const auto& e : doc.at("trajectories")) {
            m.files.push_back(e.at("file").get<std::string>());
            m.constants.push_back(trajectory_params_from_json(e.at("params")));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

inline std::vector<Trajectory> load_dataset(const fs::path& dir, DatasetManifest* manifest = nullptr) {
    DatasetManifest m = read_manifest(dir);
    std::vector<Trajectory> out;
    out.reserve(m.files.size());
    for (std::size_t i = 0; i < m.files.size(); ++i) {
        auto in = open_for_read(dir / m.files[i]);
        Trajectory t = read_trajectory_csv(in, m.penny);
        t.constants = m.constants[i];
        out.push_back(std::move(t));
    }
    if (manifest != nullptr) *manifest = std::move(m);
    return out;
}

} // namespace penny::io
