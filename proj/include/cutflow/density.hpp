#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cutflow/dynamics.hpp"
#include "cutflow/env.hpp"
#include "cutflow/report.hpp"
#include "cutflow/rng.hpp"

namespace cutflow {

struct BridgeConfig {
    std::size_t n_bridges = 256;
    std::size_t steps_per_unit = 100;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_bridges < 1) throw std::invalid_argument("bridge.n_bridges must be >= 1");
        if (steps_per_unit < 2) throw std::invalid_argument("bridge.steps_per_unit must be >= 2");
    }
};

struct DensityEstimate {
    double value = 0.0;          // gaussian_factor * bridge_mean
    double std_error = 0.0;
    double gaussian_factor = 0.0;
    double bridge_mean = 0.0;
};

// n-dimensional Gaussian kernel p_n(s, z, z')
inline double gaussian_kernel(int n, double s, const Vec& z, const Vec& z2) {
    const double r = dist2(z, z2);
    return std::pow(2.0 * M_PI * s, -0.5 * n) * std::exp(-r * r / (2.0 * s));
}

// volume of the unit ball in R^n
inline double unit_ball_volume(int n) {
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

// Discrete Brownian bridge on [0,1] pinned at y and y2, by the conditioned
// increment recursion: given B(t)=b, B(t+dt) ~ N(b + (y2-b) dt/(1-t), dt (1-t-dt)/(1-t)).
inline std::vector<double> sample_bridge(const Vec& y, const Vec& y2, std::size_t steps, Rng& rng) {
    if (steps < 2) throw std::invalid_argument("sample_bridge: steps must be >= 2");
    const int d = static_cast<int>(y.size());
    if (y2.size() != y.size()) throw std::invalid_argument("sample_bridge: endpoint dimension mismatch");
    const double dt = 1.0 / static_cast<double>(steps);
    std::vector<double> path((steps + 1) * d);
    for (int i = 0; i < d; ++i) path[i] = y[i];
    for (std::size_t k = 0; k + 1 < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double rem = 1.0 - t;
        const double var = dt * (rem - dt) / rem;
        const double sd = std::sqrt(std::max(var, 0.0));
        for (int i = 0; i < d; ++i) {
            const double b = path[k * d + i];
            path[(k + 1) * d + i] = b + (y2[i] - b) * dt / rem + sd * rng.normal();
        }
    }
    for (int i = 0; i < d; ++i) path[steps * d + i] = y2[i];
    return path;
}

inline std::vector<double> sample_bridge(const Vec& y, const Vec& y2, std::size_t steps,
                                         std::uint64_t seed) {
    Rng rng(hash_combine(seed, 0xb21d));
    return sample_bridge(y, y2, steps, rng);
}

// Discretized Girsanov factor along a bridge, Ito (left endpoint) evaluation:
//   exp{ sum_i b*((w(t_i), B_i)) . (B_{i+1} - B_i) - 1/2 sum_i |b*|^2 dt }.
// w is a d1-path on the same grid as the bridge.
inline double stochastic_exponential(const std::vector<double>& w, const Environment& env,
                                     const std::vector<double>& bridge) {
    const int d1 = env.spec().d1, d2 = env.spec().d2;
    if (w.size() % d1 != 0 || bridge.size() % d2 != 0)
        throw std::invalid_argument("stochastic_exponential: malformed paths");
    const std::size_t nodes = w.size() / d1;
    if (bridge.size() / d2 != nodes)
        throw std::invalid_argument("stochastic_exponential: grid mismatch between w and bridge");
    const std::size_t steps = nodes - 1;
    const double dt = 1.0 / static_cast<double>(steps);
    Vec x(d1 + d2);
    Vec bstar(d2);
    double exponent = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        for (int i = 0; i < d1; ++i) x[i] = w[k * d1 + i];
        for (int i = 0; i < d2; ++i) x[d1 + i] = bridge[k * d2 + i];
        env.drift_star(x, bstar.data());
        double dot = 0.0, nb = 0.0;
        for (int i = 0; i < d2; ++i) {
            dot += bstar[i] * (bridge[(k + 1) * d2 + i] - bridge[k * d2 + i]);
            nb += bstar[i] * bstar[i];
        }
        exponent += dot - 0.5 * nb * dt;
    }
    return std::exp(exponent);
}

// Quenched unit-time transition density of the x2 block given the Brownian
// block: Gaussian kernel times the bridge average of the stochastic exponential.
inline DensityEstimate estimate_transition_density(const std::vector<double>& w,
                                                   const Environment& env, const Vec& y,
                                                   const Vec& y2, const BridgeConfig& bcfg) {
    bcfg.validate();
    const int d1 = env.spec().d1, d2 = env.spec().d2;
    if (w.size() != (bcfg.steps_per_unit + 1) * static_cast<std::size_t>(d1))
        throw std::invalid_argument("estimate_transition_density: w grid mismatch");
    RunningStat stat;
    Rng rng(hash_combine(bcfg.seed, 0xde57));
    for (std::size_t m = 0; m < bcfg.n_bridges; ++m) {
        const auto bridge = sample_bridge(y, y2, bcfg.steps_per_unit, rng);
        stat.add(stochastic_exponential(w, env, bridge));
    }
    DensityEstimate est;
    Vec yy(d2), yy2(d2);
    for (int i = 0; i < d2; ++i) { yy[i] = y[i]; yy2[i] = y2[i]; }
    est.gaussian_factor = gaussian_kernel(d2, 1.0, yy, yy2);
    est.bridge_mean = stat.mean();
    est.value = est.gaussian_factor * est.bridge_mean;
    est.std_error = est.gaussian_factor * stat.std_error();
    return est;
}

struct EpsilonCalibration {
    double epsilon = 0.0;      // safety_factor * epsilon_raw, clipped to (0,1)
    double epsilon_raw = 0.0;  // min over the probe set of p_hat * vol(d2) / 2
    double min_density = 0.0;
    double min_density_se = 0.0;
    std::size_t n_probes = 0;
};

// epsilon_hat such that p_{w,omega}(1,y,y') > 2 eps / vol(d2) holds on the
// unit ball with margin: scan (environment, frozen w, y' in the unit ball
// around y) probes for the minimal estimated density.
inline EpsilonCalibration calibrate_epsilon(const std::vector<const Environment*>& envs,
                                            const std::vector<std::vector<double>>& ws,
                                            const std::vector<Vec>& y_grid,
                                            const BridgeConfig& bcfg,
                                            double safety_factor = 0.5) {
    if (envs.empty() || ws.empty() || y_grid.empty())
        throw std::invalid_argument("calibrate_epsilon: empty ensemble");
    const int d2 = static_cast<int>(y_grid.front().size());
    const double vol = unit_ball_volume(d2);
    EpsilonCalibration cal;
    cal.min_density = std::numeric_limits<double>::infinity();
    Rng dir_rng(hash_combine(bcfg.seed, 0xca11));
    for (std::size_t e = 0; e < envs.size(); ++e) {
        const Environment& env = *envs[e];
        const auto& w = ws[e % ws.size()];
        for (const Vec& y : y_grid) {
            // probe y' on the boundary sphere (the Gaussian factor is minimal
            // there) plus the center
            std::vector<Vec> probes;
            probes.push_back(y);
            const int n_dirs = std::max(2, 2 * d2);
            for (int k = 0; k < n_dirs; ++k) {
                Vec dir(d2);
                double nn = 0.0;
                for (int i = 0; i < d2; ++i) { dir[i] = dir_rng.normal(); nn += dir[i] * dir[i]; }
                nn = std::sqrt(nn);
                Vec y2 = y;
                for (int i = 0; i < d2; ++i) y2[i] += dir[i] / nn;
                probes.push_back(std::move(y2));
            }
            for (const Vec& y2 : probes) {
                BridgeConfig bc = bcfg;
                bc.seed = hash_combine(bcfg.seed, 0xab1e + cal.n_probes);
                const auto est = estimate_transition_density(w, env, y, y2, bc);
                ++cal.n_probes;
                if (est.value < cal.min_density) {
                    cal.min_density = est.value;
                    cal.min_density_se = est.std_error;
                }
            }
        }
    }
    cal.epsilon_raw = cal.min_density * vol / 2.0;
    if (cal.epsilon_raw <= 0.0)
        throw std::runtime_error("calibrate_epsilon: estimated minimum density is not positive "
                                 "(increase n_bridges or reduce kappa)");
    cal.epsilon = std::min(std::max(safety_factor * cal.epsilon_raw, 1e-12), 1.0 - 1e-12);
    return cal;
}

}  // namespace cutflow
