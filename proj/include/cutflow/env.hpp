#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cutflow/report.hpp"
#include "cutflow/rng.hpp"

namespace cutflow {

using Vec = std::vector<double>;

inline double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

enum class EnvVariant { zero, constant, symmetric, asymmetric };

inline const char* to_string(EnvVariant v) {
    switch (v) {
        case EnvVariant::zero: return "zero";
        case EnvVariant::constant: return "constant";
        case EnvVariant::symmetric: return "symmetric";
        case EnvVariant::asymmetric: return "asymmetric";
    }
    return "?";
}

struct EnvSpec {
    int d1 = 5;
    int d2 = 1;
    double kappa = 0.1;       // bound and Lipschitz constant of the drift
    double range_R = 0.5;     // finite dependence range
    double intensity = 0.0;   // Poisson points per unit volume
    EnvVariant variant = EnvVariant::zero;
    double constant_c = 0.0;  // only for variant=constant
    std::uint64_t master_seed = 1;

    int dim() const { return d1 + d2; }

    void validate() const {
        if (d1 < 1) throw std::invalid_argument("env.d1 must be >= 1");
        if (d2 < 1) throw std::invalid_argument("env.d2 must be >= 1");
        if (kappa < 0.0) throw std::invalid_argument("env.kappa must be >= 0");
        if (range_R <= 0.0) throw std::invalid_argument("env.range_R must be > 0");
        if (intensity < 0.0) throw std::invalid_argument("env.intensity must be >= 0");
        if (variant == EnvVariant::constant && std::abs(constant_c) > kappa)
            throw std::invalid_argument("env.constant_c must satisfy |c| <= kappa");
    }
};

// Stationary random drift field b(x,omega) = (0,...,0, b*(x,omega)) with
// |b| <= kappa, Lipschitz constant kappa and dependence range < R.
//
// The Poisson variants place points lazily per lattice cell; each cell's
// content is a pure function of (master_seed, cell coordinates), so shared
// concurrent evaluation is deterministic and order independent. The field is
//   b*(x) = scale * sum_p rho(x-p) phi(x-p),
// with rho even and phi odd (symmetric variant) under the reflection that
// negates the last d2 coordinates, both supported in a ball of radius R/4.
// Point counts per cell are truncated at cap_n_max and the scale divides by
// a worst-case bound, so the kappa bound and Lipschitz constant are hard
// guarantees, not high-probability ones.
class Environment {
  public:
    explicit Environment(EnvSpec spec, double cell_size = 0.0)
        : spec_(spec), cell_(cell_size > 0.0 ? cell_size : spec.range_R / 2.0) {
        spec_.validate();
        if (cell_ > spec_.range_R / 2.0 + 1e-12)
            throw std::invalid_argument("cell_size must be <= R/2");
        const int d = spec_.dim();
        cell_volume_ = std::pow(cell_, d);
        expected_per_cell_ = spec_.intensity * cell_volume_;
        cap_n_max_ = std::max<long>(8, static_cast<long>(std::ceil(4.0 * expected_per_cell_)));
        // cells whose points can reach x: support radius R/4, so at most
        // ceil((R/4)/cell)+1 cells per axis on each side of the query cell
        reach_cells_ = static_cast<int>(std::ceil((spec_.range_R / 4.0) / cell_));
        // the support ball has diameter R/2 <= 2 cells, so it meets at most
        // 2 cells per axis
        const double max_points = static_cast<double>(cap_n_max_) * std::pow(2.0, d);
        // per-point bounds for w(r)(x2-p2), w = (1-4r/R)^2: with u = 4r/R the
        // sup is R u(1-u)^2/4 <= R/27 and |grad| <= (1-u)^2 + 2u(1-u) <= 1;
        // the asymmetric offset (R/8) w adds R/8 to the sup and 1 to the slope
        const double off = (spec_.variant == EnvVariant::asymmetric) ? spec_.range_R / 8.0 : 0.0;
        const double sup_pt = spec_.range_R / 27.0 + off;
        const double lip_pt = 1.0 + (off > 0.0 ? 1.0 : 0.0);
        const double bound = max_points * std::max(sup_pt, lip_pt);
        scale_ = bound > 0.0 ? spec_.kappa / bound : 0.0;
    }

    const EnvSpec& spec() const { return spec_; }
    double cell_size() const { return cell_; }
    long point_cap() const { return cap_n_max_; }
    double normalization_scale() const { return scale_; }

    // b(x): d-vector whose first d1 components are identically zero.
    Vec drift(const Vec& x) const {
        const int d = spec_.dim();
        if (static_cast<int>(x.size()) != d) throw std::invalid_argument("drift: point dimension mismatch");
        Vec out(d, 0.0);
        drift_star(x, out.data() + spec_.d1);
        return out;
    }

    // last-d2 block only, written into out[0..d2)
    void drift_star(const Vec& x, double* out) const {
        const int d2 = spec_.d2;
        for (int i = 0; i < d2; ++i) out[i] = 0.0;
        switch (spec_.variant) {
            case EnvVariant::zero:
                return;
            case EnvVariant::constant:
                out[d2 - 1] = spec_.constant_c;
                return;
            case EnvVariant::symmetric:
            case EnvVariant::asymmetric:
                break;
        }
        if (spec_.intensity <= 0.0 || scale_ <= 0.0) return;
        const int d = spec_.dim();
        constexpr int kMaxDim = 32;
        if (d > kMaxDim) throw std::invalid_argument("drift: dimension too large");
        const double support = spec_.range_R / 4.0;
        const double sup2 = support * support;
        // exact per-axis cell ranges covering the support ball around x
        long lo[kMaxDim], hi[kMaxDim];
        for (int i = 0; i < d; ++i) {
            lo[i] = cell_index(x[i] - support);
            hi[i] = cell_index(x[i] + support);
        }
        // depth-first over the cell window, pruning by the exact minimum
        // distance from x to the cell: in high dimension the support ball
        // meets only a small fraction of the 2^d window, and skipped cells
        // cannot hold a contributing point, so the field value is unchanged
        std::vector<long> key(d);
        auto visit = [&](auto&& self, int axis, double acc2) -> void {
            if (axis == d) {
                const std::vector<double>& pts = cell_points(key);
                const std::size_t npts = pts.size() / d;
                for (std::size_t pi = 0; pi < npts; ++pi) {
                    const double* p = pts.data() + pi * d;
                    double r2 = 0.0;
                    for (int i = 0; i < d; ++i) {
                        const double dz = x[i] - p[i];
                        r2 += dz * dz;
                    }
                    if (r2 >= sup2) continue;
                    accumulate_point(x, p, std::sqrt(r2), out);
                }
                return;
            }
            for (long c = lo[axis]; c <= hi[axis]; ++c) {
                const double near = static_cast<double>(c) * cell_;
                double dx = 0.0;
                if (x[axis] < near) dx = near - x[axis];
                else if (x[axis] > near + cell_) dx = x[axis] - (near + cell_);
                const double next2 = acc2 + dx * dx;
                if (next2 >= sup2) continue;
                key[axis] = c;
                self(self, axis + 1, next2);
            }
        };
        visit(visit, 0, 0.0);
        for (int i = 0; i < d2; ++i) out[i] *= scale_;
    }

    void purge_cache() const {
        std::unique_lock lock(mutex_);
        cache_.clear();
    }

  private:
    // rho(z)*phi(z) for z = x - p, |z| = r < R/4:
    //   rho(z) = (1 - 4|z|/R)+
    //   phi(z) = z2_block * (1 - 4|z|/R)+   [+ (R/8) * e / sqrt(d2) for asymmetric]
    void accumulate_point(const Vec& x, const double* p, double r, double* out) const {
        const double q = 1.0 - 4.0 * r / spec_.range_R;
        const double w = q * q;  // rho * radial factor of phi
        const int d1 = spec_.d1, d2 = spec_.d2;
        for (int i = 0; i < d2; ++i) out[i] += w * (x[d1 + i] - p[d1 + i]);
        if (spec_.variant == EnvVariant::asymmetric) {
            const double off = spec_.range_R / 8.0 / std::sqrt(static_cast<double>(d2));
            for (int i = 0; i < d2; ++i) out[i] += w * off;
        }
    }

    long cell_index(double coord) const {
        return static_cast<long>(std::floor(coord / cell_));
    }

    std::uint64_t cell_seed(const std::vector<long>& idx) const {
        std::uint64_t h = hash_combine(spec_.master_seed, 0x9d2c5680ull);
        for (long v : idx) h = hash_combine(h, static_cast<std::uint64_t>(v));
        return h;
    }

    struct KeyHash {
        std::size_t operator()(const std::vector<long>& k) const {
            std::uint64_t h = 0x2545f4914f6cdd1dull;
            for (long v : k) h = hash_combine(h, static_cast<std::uint64_t>(v));
            return static_cast<std::size_t>(h);
        }
    };

    // flattened point coordinates for one cell, generated on demand
    const std::vector<double>& cell_points(const std::vector<long>& idx) const {
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(idx);
            if (it != cache_.end()) return it->second;
        }
        std::vector<double> pts = generate_cell(idx);
        std::unique_lock lock(mutex_);
        // keep memory bounded on long paths in high dimension: drop the whole
        // cache once it grows past the cap; cells are pure functions of
        // (master_seed, coordinates), so regeneration is bit-identical
        cached_values_ += pts.size();
        if (cache_.size() >= kMaxCachedCells || cached_values_ >= kMaxCachedValues) {
            cache_.clear();
            cached_values_ = pts.size();
        }
        auto [it, inserted] = cache_.emplace(idx, std::move(pts));
        return it->second;  // concurrent fills produce identical contents
    }

    std::vector<double> generate_cell(const std::vector<long>& idx) const {
        Rng rng(cell_seed(idx));
        long n = rng.poisson(expected_per_cell_);
        if (n > cap_n_max_) n = cap_n_max_;
        const int d = spec_.dim();
        std::vector<double> pts(static_cast<std::size_t>(n) * d);
        for (long k = 0; k < n; ++k)
            for (int i = 0; i < d; ++i)
                pts[static_cast<std::size_t>(k) * d + i] =
                    (static_cast<double>(idx[i]) + rng.uniform()) * cell_;
        return pts;
    }

    EnvSpec spec_;
    double cell_;
    double cell_volume_ = 0.0;
    double expected_per_cell_ = 0.0;
    long cap_n_max_ = 8;
    int reach_cells_ = 1;
    double scale_ = 0.0;

    static constexpr std::size_t kMaxCachedCells = 1u << 20;
    static constexpr std::size_t kMaxCachedValues = 1u << 24;  // doubles, ~128 MB

    mutable std::shared_mutex mutex_;
    mutable std::size_t cached_values_ = 0;
    mutable std::unordered_map<std::vector<long>, std::vector<double>, KeyHash> cache_;
};

inline Environment build_environment(const EnvSpec& spec, double cell_size = 0.0) {
    return Environment(spec, cell_size);
}

// Intensity for which the expected number of points inside one support ball
// (radius R/4) equals `expected`. Useful when choosing configs: much below
// 0.1 the field is zero almost everywhere, much above 1 evaluations get slow.
inline double intensity_for_support_count(const EnvSpec& spec, double expected = 0.5) {
    const int d = spec.dim();
    const double r = spec.range_R / 4.0;
    const double ball_vol =
        std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(r, d);
    return expected / ball_vol;
}

// Empirical cross-covariance of b*(x,.) and b*(y,.) over independent
// environments, averaged across the d2 components.
inline EstimateReport dependence_probe(const EnvSpec& spec, const Vec& x, const Vec& y,
                                       std::size_t n_envs) {
    if (n_envs < 100) throw std::invalid_argument("dependence_probe: n_envs must be >= 100");
    const int d2 = spec.d2;
    // two passes: component means first, then the replicate-level products so
    // the SE reflects environment-to-environment scatter
    std::vector<double> bx(n_envs * d2), by(n_envs * d2);
    for (std::size_t e = 0; e < n_envs; ++e) {
        EnvSpec s = spec;
        s.master_seed = hash_combine(spec.master_seed, 0xdeb5 + e);
        Environment env(s);
        env.drift_star(x, bx.data() + e * d2);
        env.drift_star(y, by.data() + e * d2);
    }
    std::vector<double> mx(d2, 0.0), my(d2, 0.0);
    for (std::size_t e = 0; e < n_envs; ++e)
        for (int i = 0; i < d2; ++i) {
            mx[i] += bx[e * d2 + i];
            my[i] += by[e * d2 + i];
        }
    for (int i = 0; i < d2; ++i) {
        mx[i] /= static_cast<double>(n_envs);
        my[i] /= static_cast<double>(n_envs);
    }
    RunningStat prod;
    for (std::size_t e = 0; e < n_envs; ++e) {
        double s = 0.0;
        for (int i = 0; i < d2; ++i)
            s += (bx[e * d2 + i] - mx[i]) * (by[e * d2 + i] - my[i]);
        prod.add(s / d2);
    }
    return prod.report();
}

}  // namespace cutflow
