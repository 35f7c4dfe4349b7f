#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "cutflow/env.hpp"
#include "cutflow/rng.hpp"

namespace cutflow {

struct SimConfig {
    double dt = 1e-2;
    double horizon_T = 100.0;
    std::uint64_t path_seed = 1;
    Vec start;  // empty means origin
    // Optional drift cutoff: the field acts only for t < drift_horizon, after
    // which the path continues as pure Brownian motion.  Default (infinity)
    // leaves the dynamics unchanged.  Used by variance scans where the
    // quantity of interest depends on the drift only through an initial
    // segment and the later drift would add pure sampling noise.
    double drift_horizon = std::numeric_limits<double>::infinity();

    void validate() const {
        if (dt <= 0.0) throw std::invalid_argument("sim.dt must be > 0");
        if (horizon_T < dt) throw std::invalid_argument("sim.horizon_T must be >= dt");
        const double steps_per_unit = 1.0 / dt;
        if (std::abs(steps_per_unit - std::round(steps_per_unit)) > 1e-9)
            throw std::invalid_argument("sim.dt must divide 1 (unit intervals align with the grid)");
    }

    std::size_t n_steps() const { return static_cast<std::size_t>(std::llround(horizon_T / dt)); }
    std::size_t steps_per_unit() const { return static_cast<std::size_t>(std::llround(1.0 / dt)); }
};

// Discretized path. The x1 block carries exact Gaussian increments; x2 is
// Euler-Maruyama. The raw noise is retained so W_t is reconstructable and so
// drift integrals can be recovered as displacement minus noise.
struct Trajectory {
    int d1 = 0, d2 = 0;
    double dt = 0.0;
    std::vector<double> x1;          // (n+1) * d1 row-major
    std::vector<double> x2;          // (n+1) * d2
    std::vector<double> increments;  // n * (d1+d2), sqrt(dt)-scaled noise

    std::size_t n_nodes() const { return d1 > 0 ? x1.size() / d1 : x2.size() / d2; }
    std::size_t n_steps() const { return n_nodes() - 1; }

    const double* x1_at(std::size_t k) const { return x1.data() + k * d1; }
    const double* x2_at(std::size_t k) const { return x2.data() + k * d2; }
    const double* noise_at(std::size_t k) const { return increments.data() + k * (d1 + d2); }

    Vec state_at(std::size_t k) const {
        Vec x(d1 + d2);
        for (int i = 0; i < d1; ++i) x[i] = x1_at(k)[i];
        for (int i = 0; i < d2; ++i) x[d1 + i] = x2_at(k)[i];
        return x;
    }

    // Brownian-block displacement over grid nodes [a, b]
    Vec x1_increment(std::size_t a, std::size_t b) const {
        Vec v(d1, 0.0);
        for (int i = 0; i < d1; ++i) v[i] = x1_at(b)[i] - x1_at(a)[i];
        return v;
    }

    // sum of stored noise over steps [a, b): the W-increment of the full block
    Vec noise_sum(std::size_t a, std::size_t b) const {
        const int d = d1 + d2;
        Vec v(d, 0.0);
        for (std::size_t k = a; k < b; ++k)
            for (int i = 0; i < d; ++i) v[i] += noise_at(k)[i];
        return v;
    }
};

// dX = b(X, omega) dt + dW; x1 by exact Gaussian increments, x2 by Euler.
inline Trajectory simulate_quenched(const Environment& env, const SimConfig& cfg) {
    cfg.validate();
    const int d1 = env.spec().d1, d2 = env.spec().d2, d = d1 + d2;
    const std::size_t n = cfg.n_steps();
    Trajectory tr;
    tr.d1 = d1;
    tr.d2 = d2;
    tr.dt = cfg.dt;
    tr.x1.assign((n + 1) * d1, 0.0);
    tr.x2.assign((n + 1) * d2, 0.0);
    tr.increments.assign(n * d, 0.0);
    Vec x(d, 0.0);
    if (!cfg.start.empty()) {
        if (static_cast<int>(cfg.start.size()) != d)
            throw std::invalid_argument("sim.start dimension mismatch");
        x = cfg.start;
    }
    for (int i = 0; i < d1; ++i) tr.x1[i] = x[i];
    for (int i = 0; i < d2; ++i) tr.x2[i] = x[d1 + i];

    Rng rng(hash_combine(cfg.path_seed, 0x5157));
    const double sdt = std::sqrt(cfg.dt);
    Vec bstar(d2);
    for (std::size_t k = 0; k < n; ++k) {
        if (static_cast<double>(k) * cfg.dt < cfg.drift_horizon)
            env.drift_star(x, bstar.data());
        else
            std::fill(bstar.begin(), bstar.end(), 0.0);
        double* noise = tr.increments.data() + k * d;
        for (int i = 0; i < d; ++i) noise[i] = sdt * rng.normal();
        for (int i = 0; i < d1; ++i) {
            const double prev = x[i];
            x[i] += noise[i];
            noise[i] = x[i] - prev;  // store the representable increment exactly
        }
        for (int i = 0; i < d2; ++i) x[d1 + i] += bstar[i] * cfg.dt + noise[d1 + i];
        for (int i = 0; i < d1; ++i) tr.x1[(k + 1) * d1 + i] = x[i];
        for (int i = 0; i < d2; ++i) tr.x2[(k + 1) * d2 + i] = x[d1 + i];
    }
    return tr;
}

// Standard d1-dimensional Brownian path on the grid, reusable as the frozen w.
inline std::vector<double> brownian_block(int d1, const SimConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_steps();
    std::vector<double> w((n + 1) * d1, 0.0);
    Rng rng(hash_combine(cfg.path_seed, 0xb10c));
    const double sdt = std::sqrt(cfg.dt);
    for (std::size_t k = 0; k < n; ++k)
        for (int i = 0; i < d1; ++i)
            w[(k + 1) * d1 + i] = w[k * d1 + i] + sdt * rng.normal();
    return w;
}

// Euler-Maruyama for the d2 block given a frozen Brownian block w. With
// w = the x1 block of a quenched run and the matching noise stream, this
// reproduces its x2 block exactly.
// optional external_noise: n*d2 pre-scaled noise increments (e.g. the x2
// slice of a quenched run's stored noise); when null, noise is drawn from
// cfg.path_seed.
// noise_out, when non-null, receives the n*d2 pre-scaled noise that was used.
inline std::vector<double> simulate_given_w(const Environment& env, const std::vector<double>& w,
                                            const Vec& y0, const SimConfig& cfg,
                                            const std::vector<double>* external_noise = nullptr,
                                            std::vector<double>* noise_out = nullptr) {
    cfg.validate();
    const int d1 = env.spec().d1, d2 = env.spec().d2;
    const std::size_t n = cfg.n_steps();
    if (w.size() != (n + 1) * static_cast<std::size_t>(d1))
        throw std::invalid_argument("simulate_given_w: w grid does not match cfg");
    if (static_cast<int>(y0.size()) != d2)
        throw std::invalid_argument("simulate_given_w: y0 dimension mismatch");
    if (external_noise && external_noise->size() != n * static_cast<std::size_t>(d2))
        throw std::invalid_argument("simulate_given_w: external noise grid mismatch");
    if (noise_out) noise_out->assign(n * d2, 0.0);
    std::vector<double> path((n + 1) * d2);
    for (int i = 0; i < d2; ++i) path[i] = y0[i];
    Rng rng(hash_combine(cfg.path_seed, 0x6177));
    const double sdt = std::sqrt(cfg.dt);
    Vec x(d1 + d2);
    Vec bstar(d2);
    for (std::size_t k = 0; k < n; ++k) {
        for (int i = 0; i < d1; ++i) x[i] = w[k * d1 + i];
        for (int i = 0; i < d2; ++i) x[d1 + i] = path[k * d2 + i];
        env.drift_star(x, bstar.data());
        for (int i = 0; i < d2; ++i) {
            const double dW = external_noise ? (*external_noise)[k * d2 + i] : sdt * rng.normal();
            if (noise_out) (*noise_out)[k * d2 + i] = dW;
            // group as in simulate_quenched so replays are bit identical
            path[(k + 1) * d2 + i] = path[k * d2 + i] + (bstar[i] * cfg.dt + dW);
        }
    }
    return path;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t";
    for (int i = 0; i < tr.d1; ++i) os << ",x1_" << i;
    for (int i = 0; i < tr.d2; ++i) os << ",x2_" << i;
    os << "\n";
    char buf[64];
    const std::size_t nodes = tr.n_nodes();
    for (std::size_t k = 0; k < nodes; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(k) * tr.dt);
        os << buf;
        for (int i = 0; i < tr.d1; ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", tr.x1_at(k)[i]);
            os << buf;
        }
        for (int i = 0; i < tr.d2; ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", tr.x2_at(k)[i]);
            os << buf;
        }
        os << "\n";
    }
}

}  // namespace cutflow
