// Batch driver: parse a JSON config, run one experiment, write reports, CSVs
// and optional SVG plots into the output directory.
//
// Exit codes: 0 success, 1 operational error, 2 statistical check failure in
// --assert mode.

#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cutflow/config.hpp"
#include "cutflow/coupling.hpp"
#include "cutflow/cuts.hpp"
#include "cutflow/density.hpp"
#include "cutflow/dynamics.hpp"
#include "cutflow/env.hpp"
#include "cutflow/mclt.hpp"
#include "cutflow/parallel.hpp"
#include "cutflow/plot.hpp"
#include "cutflow/stats.hpp"

namespace fs = std::filesystem;
using namespace cutflow;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    unsigned threads = 0;
    bool assert_mode = false;
    bool emit_plots = false;
};

// collected pass/fail verdicts for --assert mode
struct Checks {
    bool all_ok = true;
    Json entries = Json::array();

    void record(const std::string& name, bool ok, const std::string& detail) {
        entries.push_back({{"check", name}, {"pass", ok}, {"detail", detail}});
        if (!ok) all_ok = false;
        std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    }
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << content;
}

void write_report(const fs::path& dir, const RunConfig& cfg, Json results, const Checks& checks) {
    Json doc;
    doc["config"] = config_to_json(cfg);
    doc["results"] = std::move(results);
    if (!checks.entries.empty()) doc["checks"] = checks.entries;
    // the one field allowed to differ between identical reruns
    doc["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    write_file(dir / "report.json", doc.dump(2) + "\n");
}

std::vector<int> bernoulli_marks(std::size_t units, double eps, std::uint64_t seed) {
    // the coupling mark integrates out to an iid Bernoulli(eps) sequence
    // independent of the Brownian block, so cut statistics that never look at
    // the x2 path can skip the density machinery entirely
    Rng rng(hash_combine(seed, 0xbe52));
    std::vector<int> marks(units);
    for (auto& m : marks) m = rng.uniform() < eps ? 1 : 0;
    return marks;
}

int run_simulate(const RunConfig& cfg, const fs::path& out, Checks& checks) {
    Json results = Json::array();
    for (std::size_t r = 0; r < cfg.replicas; ++r) {
        EnvSpec s = cfg.env;
        s.master_seed = hash_combine(cfg.env.master_seed, 0x51e0 + r);
        Environment env(s);
        SimConfig sc = cfg.sim;
        sc.path_seed = hash_combine(cfg.sim.path_seed, 0xa001 + r);
        const Trajectory tr = simulate_quenched(env, sc);
        char name[64];
        std::snprintf(name, sizeof name, "trajectory_%zu.csv", r);
        std::ofstream os(out / name, std::ios::binary);
        write_trajectory_csv(os, tr);
        results.push_back({{"file", name},
                           {"env_seed", s.master_seed},
                           {"path_seed", sc.path_seed},
                           {"rows", tr.n_nodes()}});
    }
    write_report(out, cfg, {{"trajectories", results}}, checks);
    return 0;
}

int run_cuts(const RunConfig& cfg, const fs::path& out, Checks& checks, bool emit_plots) {
    const std::size_t units = static_cast<std::size_t>(std::llround(cfg.sim.horizon_T));
    std::vector<CutRecord> records(cfg.replicas);
    parallel_for(cfg.replicas, [&](std::size_t r, unsigned) {
        SimConfig sc = cfg.sim;
        sc.path_seed = hash_combine(cfg.sim.path_seed, 0xc075 + r);
        const auto w = brownian_block(cfg.env.d1, sc);
        const auto marks = bernoulli_marks(units, cfg.eps, sc.path_seed);
        records[r] = detect_cut_times(w, cfg.env.d1, sc.dt, marks, cfg.cut,
                                      hash_combine(sc.path_seed, 0x2ef1));
    });
    {
        std::ofstream os(out / "cuts_0.csv", std::ios::binary);
        write_cut_record_csv(os, records.front());
    }
    Json results;
    results["n_replicas"] = cfg.replicas;
    if (cfg.replicas >= 100) {
        const CutStatistics st = cut_statistics(records);
        results["p0"] = Json{{"value", st.p0_hat}, {"se", st.p0_se}};
        results["spacing_mean"] = st.spacing_mean;
        results["n_cuts"] = st.n_cuts;
        results["n_spacings"] = st.n_spacings;
        results["tail_exponent"] = st.fitted_tail_exponent;
        results["tail_fit_valid"] = st.tail_fit_valid;
        if (emit_plots && st.tail.size() >= 3) {
            std::vector<double> xs, ys;
            for (const auto& [n, surv] : st.tail)
                if (n >= 1 && surv > 0.0) {
                    xs.push_back(static_cast<double>(n));
                    ys.push_back(surv);
                }
            if (xs.size() >= 2) {
                std::ofstream os(out / "tail_survival.svg", std::ios::binary);
                write_line_plot_svg(os, xs, ys, "inter-cut spacing survival", "n", "P[T > n]",
                                    true, true);
            }
        }
        checks.record("cuts.p0_positive", st.p0_hat - 1.96 * st.p0_se > 0.0,
                      "p0 = " + std::to_string(st.p0_hat) + " +- " + std::to_string(st.p0_se));
    }
    write_report(out, cfg, results, checks);
    return 0;
}

int run_velocity(const RunConfig& cfg, const fs::path& out, Checks& checks) {
    const VelocityReport lln = estimate_velocity_lln(cfg.env, cfg.sim, cfg.replicas);
    Json results;
    results["v_lln"] = Json{{"value", lln.v}, {"se", lln.se}, {"n", lln.n_samples}};

    // block estimator from a handful of long coupled runs
    BlockHarvestConfig hcfg;
    hcfg.env = cfg.env;
    hcfg.sim = cfg.sim;
    hcfg.cut = cfg.cut;
    hcfg.bridge = cfg.bridge;
    hcfg.eps = cfg.eps;
    hcfg.n_runs = std::max<std::size_t>(4, cfg.replicas / 50);
    hcfg.seed = cfg.sim.path_seed;
    const auto blocks = harvest_blocks_coupled(hcfg);
    if (blocks.size() >= 100) {
        const VelocityReport vb = estimate_velocity_cutblocks(blocks);
        results["v_cutblocks"] =
            Json{{"value", vb.v}, {"se", vb.se}, {"n", vb.n_samples},
                 {"spacing_mean", vb.spacing_mean}};
        bool consistent = true;
        for (std::size_t i = 0; i < lln.v.size(); ++i) {
            const double se = std::sqrt(lln.se[i] * lln.se[i] + vb.se[i] * vb.se[i]);
            if (std::abs(lln.v[i] - vb.v[i]) > 3.0 * se + 1e-12) consistent = false;
        }
        checks.record("velocity.cross_estimator", consistent,
                      "LLN and cut-block estimates within 3 combined SE");
    } else {
        results["v_cutblocks"] = nullptr;
        std::cerr << "warning: only " << blocks.size()
                  << " complete blocks harvested; block estimator skipped\n";
    }
    write_report(out, cfg, results, checks);
    return 0;
}

int run_clt(const RunConfig& cfg, const fs::path& out, Checks& checks, bool emit_plots) {
    Vec v(cfg.env.dim(), 0.0);
    if (cfg.env.variant == EnvVariant::constant) v.back() = cfg.env.constant_c;
    const auto endpoints =
        clt_endpoints(cfg.env, cfg.sim.dt, cfg.rescale_n, cfg.replicas, cfg.sim.path_seed);
    const CovarianceReport rep =
        estimate_clt_covariance(endpoints, v, cfg.rescale_n, cfg.env.d1, cfg.env.d2);
    const int d = cfg.env.dim();
    Json results;
    results["matrix_a"] = matrix_to_json(rep.matrix_A, d, d);
    results["entry_se"] = matrix_to_json(rep.entry_se, d, d);
    results["d1_block_identity_error"] = rep.d1_block_identity_error;
    results["cross_block_max"] = rep.cross_block_max;
    results["rescale_n"] = rep.rescale_n;
    results["n_increments"] = rep.n_increments;
    if (emit_plots) {
        std::ofstream os(out / "covariance.svg", std::ios::binary);
        write_heatmap_svg(os, rep.matrix_A, d, d, "covariance of the rescaled endpoint");
    }
    checks.record("clt.d1_block_identity", rep.d1_block_identity_error < 0.05,
                  "max |A - I| over the exact block = " +
                      std::to_string(rep.d1_block_identity_error));
    write_report(out, cfg, results, checks);
    return 0;
}

int run_density(const RunConfig& cfg, const fs::path& out, Checks& checks) {
    Environment env(cfg.env);
    SimConfig wc;
    wc.dt = 1.0 / static_cast<double>(cfg.bridge.steps_per_unit);
    wc.horizon_T = 1.0;
    wc.path_seed = cfg.sim.path_seed;
    const auto w = brownian_block(cfg.env.d1, wc);
    const int d2 = cfg.env.d2;
    Json grid = Json::array();
    bool all_within = true;
    Rng rng(hash_combine(cfg.sim.path_seed, 0xd0a1));
    for (std::size_t k = 0; k < 20; ++k) {
        Vec y(d2, 0.0), y2(d2, 0.0);
        for (int i = 0; i < d2; ++i) y2[i] = rng.uniform(-1.0, 1.0);
        BridgeConfig bc = cfg.bridge;
        bc.seed = hash_combine(cfg.bridge.seed, 0x9e11 + k);
        const auto est = estimate_transition_density(w, env, y, y2, bc);
        // free-motion baseline; exact for the zero variant
        const double base = gaussian_kernel(d2, 1.0, y, y2);
        grid.push_back({{"y2", y2},
                        {"value", est.value},
                        {"se", est.std_error},
                        {"gaussian", base}});
        if (cfg.env.variant == EnvVariant::zero &&
            std::abs(est.value - base) > 3.0 * est.std_error + 1e-12)
            all_within = false;
    }
    if (cfg.env.variant == EnvVariant::zero)
        checks.record("density.zero_variant_exact", all_within,
                      "estimates match the Gaussian kernel");
    write_report(out, cfg, {{"grid", grid}}, checks);
    return 0;
}

int run_calibrate(const RunConfig& cfg, const fs::path& out, Checks& checks) {
    std::deque<Environment> envs;
    std::vector<const Environment*> env_ptrs;
    std::vector<std::vector<double>> ws;
    const std::size_t n_envs = 4;
    for (std::size_t e = 0; e < n_envs; ++e) {
        EnvSpec s = cfg.env;
        s.master_seed = hash_combine(cfg.env.master_seed, 0xca10 + e);
        envs.emplace_back(s);
        SimConfig wc;
        wc.dt = 1.0 / static_cast<double>(cfg.bridge.steps_per_unit);
        wc.horizon_T = 1.0;
        wc.path_seed = hash_combine(cfg.sim.path_seed, 0x3b0 + e);
        ws.push_back(brownian_block(cfg.env.d1, wc));
    }
    for (const auto& e : envs) env_ptrs.push_back(&e);
    std::vector<Vec> y_grid = {Vec(cfg.env.d2, 0.0)};
    const EpsilonCalibration cal = calibrate_epsilon(env_ptrs, ws, y_grid, cfg.bridge);
    Json results;
    results["epsilon"] = cal.epsilon;
    results["epsilon_raw"] = cal.epsilon_raw;
    results["min_density"] = cal.min_density;
    results["min_density_se"] = cal.min_density_se;
    results["n_probes"] = cal.n_probes;
    checks.record("calibrate.positive",
                  cal.min_density - 1.96 * cal.min_density_se > 0.0,
                  "min density CI excludes 0");
    write_report(out, cfg, results, checks);
    return 0;
}

int run_decouple(const RunConfig& cfg, const fs::path& out, Checks& checks) {
    BlockHarvestConfig hcfg;
    hcfg.env = cfg.env;
    hcfg.sim = cfg.sim;
    hcfg.cut = cfg.cut;
    hcfg.bridge = cfg.bridge;
    hcfg.eps = cfg.eps;
    hcfg.n_runs = std::max<std::size_t>(1, cfg.replicas);
    hcfg.max_blocks_per_run = 10;  // positional matching against the fresh side
    hcfg.seed = cfg.sim.path_seed;
    const auto harvested = harvest_blocks_coupled(hcfg);
    // size the fresh-environment side to roughly match; position cycling
    // means only runs with enough blocks contribute at the higher positions
    const std::size_t want = std::max<std::size_t>(harvested.size(), 500);
    const auto regenerated = regenerate_blocks(hcfg, 2 * want);
    Json results;
    results["n_harvested"] = harvested.size();
    results["n_regenerated"] = regenerated.size();
    if (harvested.size() >= 500 && regenerated.size() >= 500) {
        const TwoSampleResult res = decoupling_test(harvested, regenerated);
        results["energy_statistic"] = res.statistic;
        results["p_value"] = res.p_value;
        checks.record("decouple.same_law", !res.reject(0.01),
                      "p = " + std::to_string(res.p_value));
    } else {
        std::cerr << "warning: insufficient blocks for the two-sample test\n";
        if (checks.all_ok) checks.record("decouple.same_law", false, "insufficient blocks");
    }
    write_report(out, cfg, results, checks);
    return 0;
}

int run_scan(const RunConfig& cfg, const fs::path& out, Checks& checks, bool emit_plots) {
    const ScanReport rep = quenched_variance_scan(cfg.scan);
    Json results;
    results["n_grid"] = rep.n_grid;
    results["variance"] = rep.variance;
    results["variance_se"] = rep.variance_se;
    results["upper95"] = rep.upper95;
    results["noise_floor"] = rep.noise_floor;
    results["loglog_slope"] = rep.loglog_slope;
    results["trend_s"] = rep.trend.s_statistic;
    results["trend_p_decreasing"] = rep.trend.p_value_decreasing;
    if (emit_plots) {
        std::vector<double> xs, ys;
        for (std::size_t k = 0; k < rep.n_grid.size(); ++k)
            if (rep.variance[k] > 0.0) {
                xs.push_back(static_cast<double>(rep.n_grid[k]));
                ys.push_back(rep.variance[k]);
            }
        if (xs.size() >= 2) {
            std::ofstream os(out / "variance_scan.svg", std::ios::binary);
            write_line_plot_svg(os, xs, ys, "quenched variance of the conditional mean", "n",
                                "variance", true, true);
        }
    }
    if (cfg.env.variant == EnvVariant::symmetric || cfg.env.variant == EnvVariant::asymmetric)
        checks.record("scan.decreasing", rep.trend.decreasing(0.05),
                      "one-sided trend p = " + std::to_string(rep.trend.p_value_decreasing));
    write_report(out, cfg, results, checks);
    return 0;
}

int run_mclt(const RunConfig& cfg, const fs::path& out, Checks& checks) {
    const std::vector<std::size_t> n_list = {cfg.stream_n / 10, cfg.stream_n};
    const InvarianceReport inv =
        invariance_report(cfg.stream_kind, cfg.stream_d, n_list, cfg.stream_replicas,
                          cfg.sim.path_seed);
    Json entries = Json::array();
    for (const auto& e : inv.entries) {
        entries.push_back({{"n", e.n},
                           {"endpoint_cov", matrix_to_json(e.endpoint_cov, cfg.stream_d, cfg.stream_d)},
                           {"mardia_skew_p", e.normality.skewness_p},
                           {"mardia_kurtosis_p", e.normality.kurtosis_p},
                           {"max_dyadic_increment_corr", e.max_dyadic_increment_corr}});
    }
    const auto qv = check_quadratic_variation(cfg.stream_kind, cfg.stream_d, cfg.stream_n,
                                              {0.25, 0.5, 1.0},
                                              std::max<std::size_t>(cfg.stream_replicas, 16),
                                              cfg.sim.path_seed);
    Json qv_json = Json::array();
    for (std::size_t si = 0; si < qv.s_grid.size(); ++si)
        qv_json.push_back({{"s", qv.s_grid[si]},
                           {"matrix", matrix_to_json(qv.matrices[si], cfg.stream_d, cfg.stream_d)}});
    const EstimateReport lind =
        lindeberg_statistic(cfg.stream_kind, cfg.stream_d, cfg.stream_n, cfg.lindeberg_eps,
                            std::max<std::size_t>(cfg.stream_replicas, 16), cfg.sim.path_seed);
    Json results;
    results["invariance"] = entries;
    results["quadratic_variation"] = qv_json;
    results["lindeberg"] = estimate_to_json(lind);
    DifferenceStream probe(cfg.stream_kind, cfg.stream_d, 0);
    const auto gamma = probe.gamma();
    if (!gamma.empty()) {
        double max_dev = 0.0;
        const auto& cov = inv.entries.back().endpoint_cov;
        for (std::size_t k = 0; k < gamma.size(); ++k)
            max_dev = std::max(max_dev, std::abs(cov[k] - gamma[k]));
        checks.record("mclt.endpoint_cov", max_dev < 0.15,
                      "max deviation from the declared covariance = " + std::to_string(max_dev));
    }
    write_report(out, cfg, results, checks);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for diffusions with finite-range random drift"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global options after the subcommand name
    Options opt;
    app.add_option("--config", opt.config_path, "JSON config path")->required();
    app.add_option("--out", opt.out_dir, "output directory (overrides config)");
    app.add_option("--threads", opt.threads, "worker threads (default: hardware)");
    app.add_flag("--assert", opt.assert_mode, "fail (exit 2) on statistical check failure");
    app.add_flag("--emit-plots", opt.emit_plots, "write SVG plots next to the CSVs");

    const std::vector<std::string> subs = {"simulate",      "cuts",     "velocity",
                                           "clt",           "density",  "calibrate-eps",
                                           "decouple",      "quenched-scan", "mclt"};
    for (const auto& s : subs) app.add_subcommand(s);

    CLI11_PARSE(app, argc, argv);
    const std::string experiment = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(opt.config_path, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot read config " << opt.config_path << "\n";
            return 1;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        RunConfig cfg = parse_config(buf.str());
        cfg.experiment = experiment;
        if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
        if (opt.emit_plots) cfg.emit_plots = true;
        set_thread_count(opt.threads == 0 ? default_threads() : opt.threads);

        const fs::path out(cfg.output_dir);
        fs::create_directories(out);
        Checks checks;
        int rc = 1;
        if (experiment == "simulate") rc = run_simulate(cfg, out, checks);
        else if (experiment == "cuts") rc = run_cuts(cfg, out, checks, cfg.emit_plots);
        else if (experiment == "velocity") rc = run_velocity(cfg, out, checks);
        else if (experiment == "clt") rc = run_clt(cfg, out, checks, cfg.emit_plots);
        else if (experiment == "density") rc = run_density(cfg, out, checks);
        else if (experiment == "calibrate-eps") rc = run_calibrate(cfg, out, checks);
        else if (experiment == "decouple") rc = run_decouple(cfg, out, checks);
        else if (experiment == "quenched-scan") rc = run_scan(cfg, out, checks, cfg.emit_plots);
        else if (experiment == "mclt") rc = run_mclt(cfg, out, checks);
        if (rc != 0) return rc;
        if (opt.assert_mode && !checks.all_ok) return 2;
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
