#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cutflow/cuts.hpp"
#include "cutflow/density.hpp"
#include "cutflow/dynamics.hpp"
#include "cutflow/env.hpp"
#include "cutflow/mclt.hpp"
#include "cutflow/stats.hpp"

namespace cutflow {

using Json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string nearest_key(const std::string& key, const std::vector<std::string>& known) {
    std::string best;
    std::size_t best_d = static_cast<std::size_t>(-1);
    for (const auto& k : known) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best_d <= std::max<std::size_t>(2, key.size() / 2) ? best : std::string();
}

// strict-mode guard: every key present must be known
inline void check_keys(const Json& obj, const std::string& path,
                       const std::vector<std::string>& known) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) != known.end()) continue;
        std::string msg = "unknown key `" + (path.empty() ? key : path + "." + key) + "`";
        const std::string hint = nearest_key(key, known);
        if (!hint.empty()) msg += " (did you mean `" + hint + "`?)";
        throw ConfigError(msg);
    }
}

template <typename T>
T get_or(const Json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError((path.empty() ? std::string(key) : path + "." + key) +
                          ": type mismatch");
    }
}

}  // namespace detail

struct RunConfig {
    EnvSpec env;
    SimConfig sim;
    CutConfig cut;
    BridgeConfig bridge;
    double eps = 0.1;          // splitting weight for coupling experiments
    long rescale_n = 100;      // CLT rescaling horizon
    ScanConfig scan;           // env/dt filled from the groups above
    // martingale harness knobs
    DifferenceStream::Kind stream_kind = DifferenceStream::Kind::iid_gaussian;
    int stream_d = 2;
    std::size_t stream_n = 10000;
    std::size_t stream_replicas = 200;
    double lindeberg_eps = 0.5;

    std::string experiment = "simulate";
    std::size_t replicas = 1;
    std::string output_dir = "out";
    bool emit_plots = false;

    void validate() const {
        env.validate();
        sim.validate();
        cut.validate();
        bridge.validate();
        if (replicas < 1) throw ConfigError("replicas must be >= 1");
        if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("coupling.eps must be in (0,1)");
        if (rescale_n < 1) throw ConfigError("clt.rescale_n must be >= 1");
        static const std::vector<std::string> kExperiments = {
            "simulate", "cuts", "velocity", "clt", "density",
            "calibrate-eps", "decouple", "quenched-scan", "mclt"};
        if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end())
            throw ConfigError("unknown experiment `" + experiment + "`");
    }
};

inline EnvVariant variant_from_string(const std::string& s) {
    if (s == "zero") return EnvVariant::zero;
    if (s == "constant") return EnvVariant::constant;
    if (s == "symmetric") return EnvVariant::symmetric;
    if (s == "asymmetric") return EnvVariant::asymmetric;
    throw ConfigError("env.variant: unknown variant `" + s + "`");
}

inline RunConfig parse_config(const Json& doc) {
    detail::check_keys(doc, "", {"env", "sim", "cut", "bridge", "coupling", "clt", "scan", "mclt",
                                 "experiment", "replicas", "output_dir", "emit_plots"});
    RunConfig cfg;
    if (doc.contains("env")) {
        const Json& e = doc.at("env");
        detail::check_keys(e, "env", {"d1", "d2", "kappa", "range_r", "intensity", "variant",
                                      "constant_c", "master_seed"});
        cfg.env.d1 = detail::get_or(e, "env", "d1", cfg.env.d1);
        cfg.env.d2 = detail::get_or(e, "env", "d2", cfg.env.d2);
        cfg.env.kappa = detail::get_or(e, "env", "kappa", cfg.env.kappa);
        cfg.env.range_R = detail::get_or(e, "env", "range_r", cfg.env.range_R);
        cfg.env.intensity = detail::get_or(e, "env", "intensity", cfg.env.intensity);
        if (e.contains("variant"))
            cfg.env.variant = variant_from_string(detail::get_or<std::string>(e, "env", "variant", "zero"));
        cfg.env.constant_c = detail::get_or(e, "env", "constant_c", cfg.env.constant_c);
        cfg.env.master_seed = detail::get_or(e, "env", "master_seed", cfg.env.master_seed);
    }
    if (doc.contains("sim")) {
        const Json& s = doc.at("sim");
        detail::check_keys(s, "sim", {"dt", "horizon_t", "path_seed"});
        cfg.sim.dt = detail::get_or(s, "sim", "dt", cfg.sim.dt);
        cfg.sim.horizon_T = detail::get_or(s, "sim", "horizon_t", cfg.sim.horizon_T);
        cfg.sim.path_seed = detail::get_or(s, "sim", "path_seed", cfg.sim.path_seed);
    }
    if (doc.contains("cut")) {
        const Json& c = doc.at("cut");
        detail::check_keys(c, "cut", {"range_r", "margin", "window_past", "window_future"});
        cfg.cut.range_R = detail::get_or(c, "cut", "range_r", cfg.env.range_R);
        cfg.cut.margin = detail::get_or(c, "cut", "margin", cfg.cut.margin);
        cfg.cut.window_past = detail::get_or(c, "cut", "window_past", cfg.cut.window_past);
        cfg.cut.window_future = detail::get_or(c, "cut", "window_future", cfg.cut.window_future);
    } else {
        cfg.cut.range_R = cfg.env.range_R;
    }
    if (doc.contains("bridge")) {
        const Json& b = doc.at("bridge");
        detail::check_keys(b, "bridge", {"n_bridges", "steps_per_unit", "seed"});
        cfg.bridge.n_bridges = detail::get_or(b, "bridge", "n_bridges", cfg.bridge.n_bridges);
        cfg.bridge.steps_per_unit =
            detail::get_or(b, "bridge", "steps_per_unit", cfg.bridge.steps_per_unit);
        cfg.bridge.seed = detail::get_or(b, "bridge", "seed", cfg.bridge.seed);
    }
    if (doc.contains("coupling")) {
        const Json& c = doc.at("coupling");
        detail::check_keys(c, "coupling", {"eps"});
        cfg.eps = detail::get_or(c, "coupling", "eps", cfg.eps);
    }
    if (doc.contains("clt")) {
        const Json& c = doc.at("clt");
        detail::check_keys(c, "clt", {"rescale_n"});
        cfg.rescale_n = detail::get_or(c, "clt", "rescale_n", cfg.rescale_n);
    }
    if (doc.contains("scan")) {
        const Json& s = doc.at("scan");
        detail::check_keys(s, "scan",
                           {"m_lo", "m_hi", "n_envs", "n_paths_per_env", "drift_horizon"});
        cfg.scan.m_lo = detail::get_or(s, "scan", "m_lo", cfg.scan.m_lo);
        cfg.scan.m_hi = detail::get_or(s, "scan", "m_hi", cfg.scan.m_hi);
        cfg.scan.n_envs = detail::get_or(s, "scan", "n_envs", cfg.scan.n_envs);
        cfg.scan.n_paths_per_env =
            detail::get_or(s, "scan", "n_paths_per_env", cfg.scan.n_paths_per_env);
        if (s.contains("drift_horizon"))
            cfg.scan.drift_horizon = s.at("drift_horizon").get<double>();
    }
    if (doc.contains("mclt")) {
        const Json& m = doc.at("mclt");
        detail::check_keys(m, "mclt", {"stream", "d", "n", "replicas", "lindeberg_eps"});
        if (m.contains("stream"))
            cfg.stream_kind =
                stream_kind_from_string(detail::get_or<std::string>(m, "mclt", "stream", ""));
        cfg.stream_d = detail::get_or(m, "mclt", "d", cfg.stream_d);
        cfg.stream_n = detail::get_or(m, "mclt", "n", cfg.stream_n);
        cfg.stream_replicas = detail::get_or(m, "mclt", "replicas", cfg.stream_replicas);
        cfg.lindeberg_eps = detail::get_or(m, "mclt", "lindeberg_eps", cfg.lindeberg_eps);
    }
    cfg.experiment = detail::get_or<std::string>(doc, "", "experiment", cfg.experiment);
    cfg.replicas = detail::get_or(doc, "", "replicas", cfg.replicas);
    cfg.output_dir = detail::get_or<std::string>(doc, "", "output_dir", cfg.output_dir);
    cfg.emit_plots = detail::get_or(doc, "", "emit_plots", cfg.emit_plots);

    // the environment variable wins over every config file
    if (const char* s = std::getenv("CUTFLOW_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s, &end, 10);
        if (end == s || *end != '\0') throw ConfigError("CUTFLOW_SEED must be an integer");
        cfg.env.master_seed = static_cast<std::uint64_t>(v);
    }

    cfg.scan.env = cfg.env;
    cfg.scan.dt = cfg.sim.dt;
    cfg.scan.seed = cfg.sim.path_seed;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline RunConfig parse_config(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline const char* stream_kind_to_string(DifferenceStream::Kind k) {
    using K = DifferenceStream::Kind;
    switch (k) {
        case K::iid_gaussian: return "iid_gaussian";
        case K::rank_one: return "rank_one";
        case K::ergodic_g: return "ergodic_g";
        case K::rademacher: return "rademacher";
        case K::student_t3: return "student_t3";
    }
    return "?";
}

// full resolved configuration, echoed into every report for reproducibility
inline Json config_to_json(const RunConfig& cfg) {
    Json doc;
    doc["env"] = {{"d1", cfg.env.d1},
                  {"d2", cfg.env.d2},
                  {"kappa", cfg.env.kappa},
                  {"range_r", cfg.env.range_R},
                  {"intensity", cfg.env.intensity},
                  {"variant", to_string(cfg.env.variant)},
                  {"constant_c", cfg.env.constant_c},
                  {"master_seed", cfg.env.master_seed}};
    doc["sim"] = {{"dt", cfg.sim.dt},
                  {"horizon_t", cfg.sim.horizon_T},
                  {"path_seed", cfg.sim.path_seed}};
    doc["cut"] = {{"range_r", cfg.cut.range_R},
                  {"margin", cfg.cut.margin},
                  {"window_past", cfg.cut.window_past},
                  {"window_future", cfg.cut.window_future}};
    doc["bridge"] = {{"n_bridges", cfg.bridge.n_bridges},
                     {"steps_per_unit", cfg.bridge.steps_per_unit},
                     {"seed", cfg.bridge.seed}};
    doc["coupling"] = {{"eps", cfg.eps}};
    doc["clt"] = {{"rescale_n", cfg.rescale_n}};
    doc["scan"] = {{"m_lo", cfg.scan.m_lo},
                   {"m_hi", cfg.scan.m_hi},
                   {"n_envs", cfg.scan.n_envs},
                   {"n_paths_per_env", cfg.scan.n_paths_per_env}};
    // infinity (the default: no cutoff) is not representable in JSON
    if (std::isfinite(cfg.scan.drift_horizon))
        doc["scan"]["drift_horizon"] = cfg.scan.drift_horizon;
    doc["mclt"] = {{"stream", stream_kind_to_string(cfg.stream_kind)},
                   {"d", cfg.stream_d},
                   {"n", cfg.stream_n},
                   {"replicas", cfg.stream_replicas},
                   {"lindeberg_eps", cfg.lindeberg_eps}};
    doc["experiment"] = cfg.experiment;
    doc["replicas"] = cfg.replicas;
    doc["output_dir"] = cfg.output_dir;
    doc["emit_plots"] = cfg.emit_plots;
    return doc;
}

inline Json matrix_to_json(const std::vector<double>& m, int rows, int cols) {
    Json doc;
    doc["rows"] = rows;
    doc["cols"] = cols;
    doc["data"] = m;
    return doc;
}

inline Json estimate_to_json(const EstimateReport& e) {
    return Json{{"value", e.value}, {"se", e.std_error}, {"n", e.n}};
}

}  // namespace cutflow
