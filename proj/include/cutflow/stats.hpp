#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "cutflow/coupling.hpp"
#include "cutflow/cuts.hpp"
#include "cutflow/dynamics.hpp"
#include "cutflow/env.hpp"
#include "cutflow/hypothesis.hpp"
#include "cutflow/parallel.hpp"
#include "cutflow/report.hpp"
#include "cutflow/rng.hpp"

namespace cutflow {

struct VelocityReport {
    Vec v;              // d-vector estimate
    Vec se;             // componentwise standard errors
    double spacing_mean = 0.0;  // mean inter-cut block length (block estimator only)
    std::size_t n_samples = 0;  // replicas (LLN) or blocks (block estimator)
};

// Annealed LLN velocity: mean of X_T / T over replicas, fresh environment and
// driving noise per replica.
inline VelocityReport estimate_velocity_lln(const EnvSpec& spec, const SimConfig& cfg,
                                            std::size_t n_replicas) {
    cfg.validate();
    if (cfg.horizon_T < 100.0)
        throw std::invalid_argument("estimate_velocity_lln: horizon must be >= 100");
    const int d = spec.dim();
    std::vector<RunningCov> acc(thread_count(), RunningCov(d));
    parallel_for(n_replicas, [&](std::size_t r, unsigned w) {
        EnvSpec s = spec;
        s.master_seed = hash_combine(spec.master_seed, 0x11e0 + r);
        Environment env(s);
        SimConfig c = cfg;
        c.path_seed = hash_combine(cfg.path_seed, 0xa55e + r);
        const Trajectory tr = simulate_quenched(env, c);
        Vec xT = tr.state_at(tr.n_steps());
        for (double& x : xT) x /= cfg.horizon_T;
        acc[w].add(xT);
    });
    RunningCov total(d);
    for (const auto& a : acc) total.merge(a);
    VelocityReport rep;
    rep.v = total.mean();
    rep.se.assign(d, 0.0);
    for (int i = 0; i < d; ++i) rep.se[i] = total.mean_se(i);
    rep.n_samples = total.count();
    return rep;
}

// One inter-cut block of a run: integer length, full-state displacement, and
// the drift integral recovered as displacement minus the stored noise sum
// (exact up to the Euler step, with no quadrature on b itself).
struct CutBlock {
    double length = 0.0;
    Vec displacement;
    Vec drift_integral;
};

inline std::vector<CutBlock> harvest_blocks(const Trajectory& tr, const CutRecord& rec,
                                            bool include_truncated = false) {
    std::vector<CutBlock> blocks;
    const std::size_t spu = static_cast<std::size_t>(std::llround(1.0 / tr.dt));
    const int d = tr.d1 + tr.d2;
    for (std::size_t i = 1; i < rec.cut_indices.size(); ++i) {
        if (!include_truncated && (rec.truncated[i - 1] || rec.truncated[i])) continue;
        const std::size_t a = static_cast<std::size_t>(rec.cut_indices[i - 1]) * spu;
        const std::size_t b = static_cast<std::size_t>(rec.cut_indices[i]) * spu;
        CutBlock blk;
        blk.length = static_cast<double>(rec.cut_indices[i] - rec.cut_indices[i - 1]);
        blk.displacement.assign(d, 0.0);
        const Vec xa = tr.state_at(a), xb = tr.state_at(b);
        for (int c = 0; c < d; ++c) blk.displacement[c] = xb[c] - xa[c];
        blk.drift_integral = blk.displacement;
        const Vec noise = tr.noise_sum(a, b);
        for (int c = 0; c < d; ++c) blk.drift_integral[c] -= noise[c];
        blocks.push_back(std::move(blk));
    }
    return blocks;
}

// Trapezoid-rule drift integral over grid nodes [a, b] of a stored path;
// cross-check for the displacement-minus-noise route.
inline Vec block_drift_integral_trapezoid(const Environment& env, const Trajectory& tr,
                                          std::size_t a, std::size_t b) {
    const int d = tr.d1 + tr.d2;
    Vec sum(d, 0.0), prev(d, 0.0), cur(d, 0.0);
    prev = env.drift(tr.state_at(a));
    for (std::size_t k = a + 1; k <= b; ++k) {
        cur = env.drift(tr.state_at(k));
        for (int c = 0; c < d; ++c) sum[c] += 0.5 * (prev[c] + cur[c]) * tr.dt;
        std::swap(prev, cur);
    }
    return sum;
}

// Ratio estimator mean(block drift integral) / mean(block length), standard
// error by block bootstrap.
inline VelocityReport estimate_velocity_cutblocks(const std::vector<CutBlock>& blocks,
                                                  std::size_t n_bootstrap = 400,
                                                  std::uint64_t seed = 0xb007) {
    if (blocks.size() < 100)
        throw std::invalid_argument("estimate_velocity_cutblocks: need >= 100 blocks");
    const int d = static_cast<int>(blocks.front().displacement.size());
    auto ratio = [&](const std::vector<std::size_t>& idx) {
        Vec num(d, 0.0);
        double den = 0.0;
        for (std::size_t i : idx) {
            for (int c = 0; c < d; ++c) num[c] += blocks[i].drift_integral[c];
            den += blocks[i].length;
        }
        for (int c = 0; c < d; ++c) num[c] /= den;
        return num;
    };
    std::vector<std::size_t> all(blocks.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    VelocityReport rep;
    rep.v = ratio(all);
    RunningCov boot(d);
    Rng rng(hash_combine(seed, 0x5702));
    std::vector<std::size_t> idx(blocks.size());
    for (std::size_t bs = 0; bs < n_bootstrap; ++bs) {
        for (auto& i : idx) i = static_cast<std::size_t>(rng.below(blocks.size()));
        boot.add(ratio(idx));
    }
    const auto cov = boot.covariance();
    rep.se.assign(d, 0.0);
    for (int c = 0; c < d; ++c) rep.se[c] = std::sqrt(std::max(cov[c * d + c], 0.0));
    double len = 0.0;
    for (const auto& b : blocks) len += b.length;
    rep.spacing_mean = len / static_cast<double>(blocks.size());
    rep.n_samples = blocks.size();
    return rep;
}

namespace detail {

// Cyclic Jacobi eigen-decomposition of a symmetric matrix (row-major).
// Returns eigenvalues; vectors as columns of `vecs` when non-null.
inline std::vector<double> jacobi_eigen(std::vector<double> a, int d,
                                        std::vector<double>* vecs = nullptr) {
    std::vector<double> v(d * d, 0.0);
    for (int i = 0; i < d; ++i) v[i * d + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
        if (off < 1e-24) break;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a[k * d + p], akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[p * d + k], aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = v[k * d + p], vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
    }
    std::vector<double> eig(d);
    for (int i = 0; i < d; ++i) eig[i] = a[i * d + i];
    if (vecs) *vecs = std::move(v);
    return eig;
}

// Symmetrize, then clamp negative eigenvalues at zero so the reported matrix
// is positive semidefinite.
inline std::vector<double> psd_project(std::vector<double> m, int d) {
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double s = 0.5 * (m[i * d + j] + m[j * d + i]);
            m[i * d + j] = s;
            m[j * d + i] = s;
        }
    std::vector<double> vecs;
    const auto eig = jacobi_eigen(m, d, &vecs);
    bool any_neg = false;
    for (double e : eig)
        if (e < 0.0) { any_neg = true; break; }
    if (!any_neg) return m;
    std::vector<double> out(d * d, 0.0);
    for (int k = 0; k < d; ++k) {
        const double e = std::max(eig[k], 0.0);
        if (e == 0.0) continue;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out[i * d + j] += e * vecs[i * d + k] * vecs[j * d + k];
    }
    return out;
}

}  // namespace detail

struct CovarianceReport {
    int d1 = 0, d2 = 0;
    std::vector<double> matrix_A;   // d x d, symmetric PSD, row-major
    std::vector<double> entry_se;   // asymptotic per-entry SEs
    double d1_block_identity_error = 0.0;  // max |A_ij - delta_ij| over the d1 block
    double cross_block_max = 0.0;          // max |A_ij| over the d1 x d2 blocks
    std::size_t n_increments = 0;
    long rescale_n = 0;
};

// Empirical covariance of (X_n - v n) / sqrt(n) over replica endpoints.
inline CovarianceReport estimate_clt_covariance(const std::vector<Vec>& endpoints, const Vec& v,
                                                long rescale_n, int d1, int d2) {
    const int d = d1 + d2;
    if (endpoints.size() < 2) throw std::invalid_argument("estimate_clt_covariance: too few replicas");
    if (static_cast<int>(v.size()) != d)
        throw std::invalid_argument("estimate_clt_covariance: v dimension mismatch");
    const double sn = std::sqrt(static_cast<double>(rescale_n));
    RunningCov acc(d);
    Vec z(d);
    for (const Vec& x : endpoints) {
        if (static_cast<int>(x.size()) != d)
            throw std::invalid_argument("estimate_clt_covariance: endpoint dimension mismatch");
        for (int i = 0; i < d; ++i) z[i] = (x[i] - v[i] * static_cast<double>(rescale_n)) / sn;
        acc.add(z);
    }
    CovarianceReport rep;
    rep.d1 = d1;
    rep.d2 = d2;
    rep.rescale_n = rescale_n;
    rep.n_increments = acc.count();
    rep.matrix_A = detail::psd_project(acc.covariance(), d);
    // Gaussian asymptotics: Var(A_ij) ~ (A_ii A_jj + A_ij^2) / n
    rep.entry_se.assign(d * d, 0.0);
    const double n = static_cast<double>(acc.count());
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double aii = rep.matrix_A[i * d + i], ajj = rep.matrix_A[j * d + j];
            const double aij = rep.matrix_A[i * d + j];
            rep.entry_se[i * d + j] = std::sqrt(std::max(aii * ajj + aij * aij, 0.0) / n);
        }
    for (int i = 0; i < d1; ++i)
        for (int j = 0; j < d1; ++j) {
            const double tgt = (i == j) ? 1.0 : 0.0;
            rep.d1_block_identity_error =
                std::max(rep.d1_block_identity_error, std::abs(rep.matrix_A[i * d + j] - tgt));
        }
    for (int i = 0; i < d1; ++i)
        for (int j = d1; j < d; ++j)
            rep.cross_block_max = std::max(rep.cross_block_max, std::abs(rep.matrix_A[i * d + j]));
    return rep;
}

// Replica endpoints X_n for the covariance estimator: fresh environment and
// noise per replica, integer horizon rescale_n.
inline std::vector<Vec> clt_endpoints(const EnvSpec& spec, double dt, long rescale_n,
                                      std::size_t n_replicas, std::uint64_t seed = 1) {
    SimConfig cfg;
    cfg.dt = dt;
    cfg.horizon_T = static_cast<double>(rescale_n);
    cfg.validate();
    std::vector<Vec> out(n_replicas);
    parallel_for(n_replicas, [&](std::size_t r, unsigned) {
        EnvSpec s = spec;
        s.master_seed = hash_combine(spec.master_seed, 0xc17e + r);
        Environment env(s);
        SimConfig c = cfg;
        c.path_seed = hash_combine(seed, 0xe9d0 + r);
        const Trajectory tr = simulate_quenched(env, c);
        out[r] = tr.state_at(tr.n_steps());
    });
    return out;
}

// ---------------------------------------------------------------------------
// Decoupling: blocks harvested inside long coupled runs vs blocks rebuilt
// with a fresh independent environment per block must share a joint law of
// (length, displacement).

struct BlockHarvestConfig {
    EnvSpec env;
    SimConfig sim;        // integer horizon per run
    CutConfig cut;
    BridgeConfig bridge;
    double eps = 0.1;
    std::size_t n_runs = 8;
    // cap on blocks used per run (0 = all). Complete blocks near the end of a
    // finite run under-sample long lengths (a length-L block must start L
    // before the last candidate); capping the harvest at the first few
    // positions and cycling the regenerated side through the same positions
    // makes the two samples draws from the identical positional mixture.
    std::size_t max_blocks_per_run = 0;
    bool ignore_lambda = false;  // negative control: treat every unit as marked
    std::uint64_t seed = 1;
};

namespace detail {
inline std::vector<CutBlock> blocks_of_run(const BlockHarvestConfig& hcfg, std::uint64_t env_tag,
                                           std::uint64_t path_tag) {
    EnvSpec s = hcfg.env;
    s.master_seed = hash_combine(hcfg.env.master_seed, env_tag);
    Environment env(s);
    SimConfig c = hcfg.sim;
    c.path_seed = hash_combine(hcfg.seed, path_tag);
    const CoupledRun run = simulate_coupled(env, c, hcfg.eps, hcfg.bridge);
    std::vector<int> marks = run.lambdas;
    if (hcfg.ignore_lambda) std::fill(marks.begin(), marks.end(), 1);
    const CutRecord rec = detect_cut_times(run.trajectory.x1, s.d1, c.dt, marks, hcfg.cut,
                                           hash_combine(c.path_seed, 0x2ef1));
    return harvest_blocks(run.trajectory, rec);
}
}  // namespace detail

// All inter-cut blocks from n_runs long runs (one fresh environment per run).
inline std::vector<CutBlock> harvest_blocks_coupled(const BlockHarvestConfig& hcfg) {
    std::vector<std::vector<CutBlock>> per_run(hcfg.n_runs);
    parallel_for(hcfg.n_runs, [&](std::size_t r, unsigned) {
        per_run[r] = detail::blocks_of_run(hcfg, 0x4a12 + r, 0x90f3 + r);
        if (hcfg.max_blocks_per_run > 0 && per_run[r].size() > hcfg.max_blocks_per_run)
            per_run[r].resize(hcfg.max_blocks_per_run);
    });
    std::vector<CutBlock> all;
    for (auto& v : per_run)
        for (auto& b : v) all.push_back(std::move(b));
    return all;
}

// One block per run, environment fresh for every block, so no two blocks
// share an environment. The target position cycles through 1..max_blocks
// (run r contributes its (r mod max)-th complete block if it has one), which
// reproduces the positional mixture of harvest_blocks_coupled exactly.
inline std::vector<CutBlock> regenerate_blocks(const BlockHarvestConfig& hcfg,
                                               std::size_t n_runs) {
    const std::size_t cycle = std::max<std::size_t>(hcfg.max_blocks_per_run, 1);
    std::vector<std::vector<CutBlock>> per_run(n_runs);
    parallel_for(n_runs, [&](std::size_t r, unsigned) {
        auto blocks = detail::blocks_of_run(hcfg, 0x7b21 + r, 0x3c44 + r);
        const std::size_t pos = r % cycle;
        if (pos < blocks.size()) per_run[r].push_back(std::move(blocks[pos]));
    });
    std::vector<CutBlock> out;
    for (auto& v : per_run)
        for (auto& b : v) out.push_back(std::move(b));
    return out;
}

inline TwoSampleResult decoupling_test(const std::vector<CutBlock>& harvested,
                                       const std::vector<CutBlock>& regenerated,
                                       std::size_t n_permutations = 199,
                                       std::uint64_t seed = 0xdc99) {
    if (harvested.size() < 500 || regenerated.size() < 500)
        throw std::invalid_argument("decoupling_test: need >= 500 blocks per side");
    auto features = [](const std::vector<CutBlock>& blocks) {
        std::vector<std::vector<double>> out;
        out.reserve(blocks.size());
        for (const auto& b : blocks) {
            std::vector<double> f;
            f.reserve(1 + b.displacement.size());
            f.push_back(b.length);
            for (double x : b.displacement) f.push_back(x);
            out.push_back(std::move(f));
        }
        return out;
    };
    return energy_distance_test(features(harvested), features(regenerated), n_permutations, seed);
}

// ---------------------------------------------------------------------------
// Quenched variance decay: variance across environments of the
// within-environment mean of a bounded Lipschitz functional of the
// diffusively rescaled path, on a dyadic n-grid.

struct ScanConfig {
    EnvSpec env;
    double dt = 1e-2;
    int m_lo = 3, m_hi = 8;  // n = 2^m
    std::size_t n_envs = 64;
    std::size_t n_paths_per_env = 8;
    std::uint64_t seed = 1;
    // Drift cutoff forwarded to the simulation (infinity = exact dynamics).
    // In high dimension the environment dependence of the conditional mean is
    // carried by the first few dependence-lengths of the path (the heat
    // kernel escapes the correlated region; the neglected tail is
    // O((R^2/drift_horizon)^{d/2-1}) in relative terms), while drift acting
    // later only adds flat per-path sampling noise.  Cutting the drift at the
    // smallest grid horizon makes signal and noise decay together, so every
    // grid point is equally resolvable.
    double drift_horizon = std::numeric_limits<double>::infinity();
};

struct ScanReport {
    std::vector<long> n_grid;
    // Environment component of the variance of the conditional mean.  Path
    // seeds are shared across environments (common random numbers), which
    // makes (environment, path) a balanced two-way layout: the raw
    // across-environment variance of the inner mean carries a flat
    // interaction floor sigma_int^2 / n_paths that masks the decay, so the
    // interaction mean square is subtracted out.  Values are unclamped and
    // can dip slightly below zero when the true component is ~0.
    std::vector<double> variance;
    std::vector<double> variance_se;  // chi^2 noise scale of the estimate
    // One-sided upper confidence sequence (estimate + 2 se).  The component
    // itself sits at or below the noise scale whenever the disorder is weak
    // relative to the sampling budget; the envelope is then the certified
    // statement: the variance is bounded by a sequence that collapses with n.
    // The trend test and log-log slope are computed on this envelope.
    std::vector<double> upper95;
    std::vector<double> noise_floor;  // inner-mean sampling variance estimate
    double loglog_slope = 0.0;
    TrendResult trend;
};

// Bounded 1-Lipschitz functional of the rescaled path (sup norm): tanh of the
// average of the last coordinate at the half and full horizon.
inline double scan_functional(const Trajectory& tr, long n) {
    const std::size_t spu = static_cast<std::size_t>(std::llround(1.0 / tr.dt));
    const double sn = std::sqrt(static_cast<double>(n));
    const double end = tr.x2_at(static_cast<std::size_t>(n) * spu)[tr.d2 - 1] / sn;
    const double mid = tr.x2_at(static_cast<std::size_t>(n) * spu / 2)[tr.d2 - 1] / sn;
    return std::tanh(0.5 * (end + mid));
}

template <typename F>
ScanReport quenched_variance_scan(F&& functional, const ScanConfig& scfg) {
    if (scfg.m_hi <= scfg.m_lo) throw std::invalid_argument("scan: m_hi must exceed m_lo");
    if (scfg.n_envs < 2 || scfg.n_paths_per_env < 2)
        throw std::invalid_argument("scan: need >= 2 environments and paths");
    ScanReport rep;
    for (int m = scfg.m_lo; m <= scfg.m_hi; ++m) rep.n_grid.push_back(1l << m);
    const long n_max = rep.n_grid.back();
    const std::size_t n_points = rep.n_grid.size();

    // full (environment, path, n) table; paths share seeds across
    // environments (common random numbers), so paths form a crossed factor
    const std::size_t E = scfg.n_envs, P = scfg.n_paths_per_env;
    std::vector<double> table(E * P * n_points, 0.0);
    parallel_for(E, [&](std::size_t e, unsigned) {
        EnvSpec s = scfg.env;
        s.master_seed = hash_combine(scfg.env.master_seed, 0x5ca0 + e);
        Environment env(s);
        SimConfig cfg;
        cfg.dt = scfg.dt;
        cfg.horizon_T = static_cast<double>(n_max);
        cfg.drift_horizon = scfg.drift_horizon;
        for (std::size_t p = 0; p < P; ++p) {
            // same path seeds for every environment: common random numbers
            cfg.path_seed = hash_combine(scfg.seed, 0xcafe + p);
            const Trajectory tr = simulate_quenched(env, cfg);
            for (std::size_t k = 0; k < n_points; ++k)
                table[(e * P + p) * n_points + k] = functional(tr, rep.n_grid[k]);
        }
    });

    rep.variance.assign(n_points, 0.0);
    rep.variance_se.assign(n_points, 0.0);
    rep.noise_floor.assign(n_points, 0.0);
    std::vector<double> env_mean(E), path_mean(P);
    for (std::size_t k = 0; k < n_points; ++k) {
        const auto at = [&](std::size_t e, std::size_t p) {
            return table[(e * P + p) * n_points + k];
        };
        double grand = 0.0;
        std::fill(env_mean.begin(), env_mean.end(), 0.0);
        std::fill(path_mean.begin(), path_mean.end(), 0.0);
        for (std::size_t e = 0; e < E; ++e)
            for (std::size_t p = 0; p < P; ++p) {
                env_mean[e] += at(e, p);
                path_mean[p] += at(e, p);
                grand += at(e, p);
            }
        for (auto& v : env_mean) v /= static_cast<double>(P);
        for (auto& v : path_mean) v /= static_cast<double>(E);
        grand /= static_cast<double>(E * P);

        double ss_env = 0.0, ss_int = 0.0, within = 0.0;
        for (std::size_t e = 0; e < E; ++e) {
            ss_env += (env_mean[e] - grand) * (env_mean[e] - grand);
            for (std::size_t p = 0; p < P; ++p) {
                const double r = at(e, p) - env_mean[e] - path_mean[p] + grand;
                ss_int += r * r;
                const double w = at(e, p) - env_mean[e];
                within += w * w;
            }
        }
        const double ms_env =
            static_cast<double>(P) * ss_env / static_cast<double>(E - 1);
        const double ms_int =
            ss_int / static_cast<double>((E - 1) * (P - 1));
        // two-way decomposition: the between-environment mean square carries
        // the interaction floor sigma_int^2; subtracting the interaction
        // mean square leaves an unbiased estimate of the environment
        // component of the conditional-mean variance
        rep.variance[k] = (ms_env - ms_int) / static_cast<double>(P);
        // dominant chi^2 fluctuation of the between-environment mean square
        // when the environment component is small
        rep.variance_se[k] = std::sqrt(2.0 / static_cast<double>(E - 1)) * ms_int /
                             static_cast<double>(P);
        rep.noise_floor[k] = within / static_cast<double>(E * (P - 1)) / static_cast<double>(P);
    }

    rep.upper95.assign(n_points, 0.0);
    for (std::size_t k = 0; k < n_points; ++k)
        rep.upper95[k] = rep.variance[k] + 2.0 * rep.variance_se[k];

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t k = 0; k < n_points; ++k) {
        if (rep.upper95[k] <= 0.0) continue;
        const double lx = std::log(static_cast<double>(rep.n_grid[k]));
        const double ly = std::log(rep.upper95[k]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m >= 2) {
        const double denom = static_cast<double>(m) * sxx - sx * sx;
        if (denom > 0.0) rep.loglog_slope = (static_cast<double>(m) * sxy - sx * sy) / denom;
    }
    rep.trend = mann_kendall_decreasing(rep.upper95);
    return rep;
}

inline ScanReport quenched_variance_scan(const ScanConfig& scfg) {
    return quenched_variance_scan(scan_functional, scfg);
}

}  // namespace cutflow
