#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "cutflow/density.hpp"
#include "cutflow/dynamics.hpp"
#include "cutflow/env.hpp"
#include "cutflow/rng.hpp"

namespace cutflow {

struct CoupledRun {
    Trajectory trajectory;
    std::vector<int> lambdas;            // one bit per whole unit interval
    std::vector<double> accept_ratio;    // estimated eps*u(Y)/p_hat(Y) per step
    std::vector<double> accept_se;
    std::size_t n_clipped = 0;           // steps whose ratio estimate exceeded 1
};

struct UnitStepResult {
    Vec y_next;
    int lambda = 0;
    std::vector<double> interior;  // d2-path over the unit interval, conditioned path
    std::vector<double> noise;     // matching pre-scaled noise increments
    double accept_ratio = 0.0;
    double accept_se = 0.0;
    bool clipped = false;
};

namespace detail {
// subsample a fine unit-interval d1-path onto the bridge grid
inline std::vector<double> subsample_w(const std::vector<double>& w_fine, int d1,
                                       std::size_t fine_steps, std::size_t coarse_steps) {
    if (fine_steps == coarse_steps) return w_fine;
    if (fine_steps % coarse_steps != 0)
        throw std::invalid_argument("bridge steps_per_unit must divide the simulation grid");
    const std::size_t f = fine_steps / coarse_steps;
    std::vector<double> out((coarse_steps + 1) * d1);
    for (std::size_t k = 0; k <= coarse_steps; ++k)
        for (int i = 0; i < d1; ++i) out[k * d1 + i] = w_fine[k * f * d1 + i];
    return out;
}
}  // namespace detail

// One unit-time step of the splitting coupling. Y ~ p_{w,omega}(1, y, .) is
// drawn by simulating the conditioned d2-dynamics (the Y-marginal is exact);
// the Bernoulli mark is assigned post hoc with probability
// clip(eps * u(Y) / p_hat(Y), 0, 1), u = uniform density on the unit ball
// around y. Conditionally on lambda=1 the increment is uniform on that ball,
// up to density-estimation noise.
inline UnitStepResult sample_unit_step(const Environment& env,
                                       const std::vector<double>& w_segment, const Vec& y,
                                       double eps, const BridgeConfig& bcfg,
                                       std::uint64_t seed) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("sample_unit_step: eps must be in (0,1)");
    const int d1 = env.spec().d1, d2 = env.spec().d2;
    if (w_segment.size() % d1 != 0 || w_segment.size() / d1 < 2)
        throw std::invalid_argument("sample_unit_step: malformed w segment");
    const std::size_t steps = w_segment.size() / d1 - 1;

    SimConfig icfg;
    icfg.dt = 1.0 / static_cast<double>(steps);
    icfg.horizon_T = 1.0;
    icfg.path_seed = hash_combine(seed, 0x57e9);

    UnitStepResult res;
    res.interior = simulate_given_w(env, w_segment, y, icfg, nullptr, &res.noise);
    res.y_next.assign(d2, 0.0);
    for (int i = 0; i < d2; ++i) res.y_next[i] = res.interior[steps * d2 + i];

    const double r = dist2(y, res.y_next);
    const double vol = unit_ball_volume(d2);
    const double u_density = (r <= 1.0) ? 1.0 / vol : 0.0;

    double ratio = 0.0, se = 0.0;
    if (u_density > 0.0) {
        BridgeConfig bc = bcfg;
        bc.seed = hash_combine(seed, 0xd3a5);
        const auto w_bridge = detail::subsample_w(w_segment, d1, steps, bc.steps_per_unit);
        const auto est = estimate_transition_density(w_bridge, env, y, res.y_next, bc);
        if (est.value <= 0.0)
            throw std::runtime_error("sample_unit_step: estimated density is not positive "
                                     "(n_bridges too small)");
        ratio = eps * u_density / est.value;
        se = ratio * est.std_error / est.value;
    }
    res.accept_ratio = ratio;
    res.accept_se = se;
    if (ratio > 1.0) {
        res.clipped = true;
        ratio = 1.0;
    }
    Rng mark(hash_combine(seed, 0x1a3b));
    res.lambda = (mark.uniform() < ratio) ? 1 : 0;
    return res;
}

// Chain unit steps over an integer horizon; the x1 block is simulated exactly
// and shared with the interior conditioned paths, so the integer-time skeleton
// is distributed as the quenched diffusion.
inline CoupledRun simulate_coupled(const Environment& env, const SimConfig& cfg, double eps,
                                   const BridgeConfig& bcfg) {
    cfg.validate();
    const double units_d = cfg.horizon_T;
    if (std::abs(units_d - std::round(units_d)) > 1e-9)
        throw std::invalid_argument("simulate_coupled: horizon_T must be an integer");
    const std::size_t units = static_cast<std::size_t>(std::llround(units_d));
    const int d1 = env.spec().d1, d2 = env.spec().d2, d = d1 + d2;
    const std::size_t spu = cfg.steps_per_unit();

    const auto w = brownian_block(d1, cfg);

    CoupledRun run;
    Trajectory& tr = run.trajectory;
    tr.d1 = d1;
    tr.d2 = d2;
    tr.dt = cfg.dt;
    const std::size_t n = units * spu;
    tr.x1 = w;
    tr.x2.assign((n + 1) * d2, 0.0);
    tr.increments.assign(n * d, 0.0);
    // x1 noise = increments of w
    for (std::size_t k = 0; k < n; ++k)
        for (int i = 0; i < d1; ++i)
            tr.increments[k * d + i] = w[(k + 1) * d1 + i] - w[k * d1 + i];

    Vec y(d2, 0.0);
    if (!cfg.start.empty()) {
        for (int i = 0; i < d2; ++i) y[i] = cfg.start[d1 + i];
        for (int i = 0; i < d1; ++i)
            if (cfg.start[i] != 0.0)
                throw std::invalid_argument("simulate_coupled: x1 start must be the origin");
    }
    for (int i = 0; i < d2; ++i) tr.x2[i] = y[i];

    for (std::size_t m = 0; m < units; ++m) {
        // unit segment of w in absolute coordinates: the drift is evaluated at
        // the true x1 position, which replaces shifting the environment
        std::vector<double> seg((spu + 1) * d1);
        for (std::size_t k = 0; k <= spu; ++k)
            for (int i = 0; i < d1; ++i)
                seg[k * d1 + i] = w[(m * spu + k) * d1 + i];
        const auto step = sample_unit_step(env, seg, y, eps, bcfg,
                                           hash_combine(cfg.path_seed, 0xc09e + m));
        for (std::size_t k = 1; k <= spu; ++k)
            for (int i = 0; i < d2; ++i)
                tr.x2[(m * spu + k) * d2 + i] = step.interior[k * d2 + i];
        for (std::size_t k = 0; k < spu; ++k)
            for (int i = 0; i < d2; ++i)
                tr.increments[(m * spu + k) * d + d1 + i] = step.noise[k * d2 + i];
        y = step.y_next;
        run.lambdas.push_back(step.lambda);
        run.accept_ratio.push_back(step.accept_ratio);
        run.accept_se.push_back(step.accept_se);
        if (step.clipped) ++run.n_clipped;
    }
    return run;
}

struct ChainedKernelMean {
    Vec mean;
    Vec se;
    std::size_t n_samples = 0;
};

// Monte Carlo evaluation of the nested-kernel representation of E[X^2_k]:
// successive draws from the splitting kernel h(., lambda_i, ., ., .) along a
// frozen (w, lambda) pair. Cross-checks simulate_coupled empirical means.
inline ChainedKernelMean chained_kernel_mean(const Environment& env, const std::vector<double>& w,
                                             const std::vector<int>& lambdas, std::size_t k,
                                             double eps, const BridgeConfig& bcfg,
                                             std::size_t n_samples, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("chained_kernel_mean: k must be >= 1");
    if (lambdas.size() < k) throw std::invalid_argument("chained_kernel_mean: lambda sequence too short");
    const int d1 = env.spec().d1, d2 = env.spec().d2;
    const std::size_t spu = bcfg.steps_per_unit;
    if (w.size() < (k * spu + 1) * static_cast<std::size_t>(d1))
        throw std::invalid_argument("chained_kernel_mean: w too short");

    RunningCov acc(d2);
    for (std::size_t s = 0; s < n_samples; ++s) {
        Vec y(d2, 0.0);
        Rng rng(hash_combine(seed, 0xc4a1 + s));
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<double> seg((spu + 1) * d1);
            for (std::size_t j = 0; j <= spu; ++j)
                for (int c = 0; c < d1; ++c)
                    seg[j * d1 + c] = w[(i * spu + j) * d1 + c];
            if (lambdas[i] == 1) {
                // uniform on the unit ball around y
                Vec dir(d2);
                double nn = 0.0;
                for (int c = 0; c < d2; ++c) { dir[c] = rng.normal(); nn += dir[c] * dir[c]; }
                nn = std::sqrt(nn);
                const double rad = std::pow(rng.uniform_pos(), 1.0 / d2);
                for (int c = 0; c < d2; ++c) y[c] += rad * dir[c] / nn;
            } else {
                // residual kernel: proposal Y ~ p, accept w.p. 1 - eps u(Y)/p_hat(Y)
                for (int attempt = 0;; ++attempt) {
                    if (attempt > 1000)
                        throw std::runtime_error("chained_kernel_mean: residual rejection stalled");
                    const auto step = sample_unit_step(env, seg, y, eps, bcfg,
                                                       rng.next_u64());
                    double rej = 1.0 - std::min(step.accept_ratio, 1.0);
                    if (rng.uniform() < rej) {
                        y = step.y_next;
                        break;
                    }
                }
            }
        }
        acc.add(y);
    }
    ChainedKernelMean out;
    out.mean = acc.mean();
    out.se.assign(d2, 0.0);
    for (int c = 0; c < d2; ++c) out.se[c] = acc.mean_se(c);
    out.n_samples = acc.count();
    return out;
}

inline void write_lambda_csv(std::ostream& os, const CoupledRun& run) {
    os << "n,lambda,accept_ratio,accept_se\n";
    char buf[96];
    for (std::size_t i = 0; i < run.lambdas.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g\n", i, run.lambdas[i],
                      run.accept_ratio[i], run.accept_se[i]);
        os << buf;
    }
}

}  // namespace cutflow
