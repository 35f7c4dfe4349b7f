#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cutflow/report.hpp"
#include "cutflow/rng.hpp"

namespace cutflow {

struct CutConfig {
    double range_R = 0.5;
    double margin = -1.0;         // < 0 means default 0.1 * R
    double window_past = 50.0;    // time units of past considered
    double window_future = 50.0;  // time units of future considered

    double margin_value() const { return margin < 0.0 ? 0.1 * range_R : margin; }

    void validate() const {
        if (range_R <= 0.0) throw std::invalid_argument("cut.range_R must be > 0");
        if (window_past < 1.0 || window_future < 1.0)
            throw std::invalid_argument("cut.windows must be >= 1");
    }
};

struct CutRecord {
    std::vector<long> cut_indices;     // candidate integer times, sorted
    std::vector<double> separations;   // min past/future distance per cut
    std::vector<bool> truncated;       // window-limited evidence flag
    long first_candidate = 0;
    long last_candidate = -1;          // inclusive; candidates = last - first + 1

    long n_candidates() const { return last_candidate >= first_candidate ? last_candidate - first_candidate + 1 : 0; }
};

namespace detail {

// flat view of n points of dimension d
struct PointSet {
    const double* data;
    std::size_t n;
    int d;
    const double* at(std::size_t i) const { return data + i * d; }
};

inline double pair_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dz = a[i] - b[i];
        s += dz * dz;
    }
    return std::sqrt(s);
}

}  // namespace detail

namespace detail {

// centroid/radius bounding summaries of fixed-size chunks of a point set;
// works in any dimension (grid buckets degrade badly past d ~ 3)
struct ChunkIndex {
    static constexpr std::size_t kChunk = 32;
    std::size_t n_chunks = 0;
    std::vector<double> center;  // n_chunks * d
    std::vector<double> radius;

    ChunkIndex(const double* pts, std::size_t n, int d) {
        n_chunks = (n + kChunk - 1) / kChunk;
        center.assign(n_chunks * d, 0.0);
        radius.assign(n_chunks, 0.0);
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
            double* ctr = center.data() + c * d;
            for (std::size_t i = lo; i < hi; ++i)
                for (int k = 0; k < d; ++k) ctr[k] += pts[i * d + k];
            for (int k = 0; k < d; ++k) ctr[k] /= static_cast<double>(hi - lo);
            for (std::size_t i = lo; i < hi; ++i)
                radius[c] = std::max(radius[c], pair_dist(pts + i * d, ctr, d));
        }
    }
};

}  // namespace detail

// Exact minimum pairwise Euclidean distance between two point sets. Both sets
// are split into chunks summarized by a bounding ball; chunk pairs whose
// center distance minus radii cannot beat the current best are skipped, and
// only surviving pairs are scanned exhaustively. If early_exit_below > 0 the
// search may return as soon as any pair closer than that threshold is found
// (the returned value is that pair's distance, which suffices for a
// "< threshold" verdict); with early_exit_below <= 0 the result is the exact
// global minimum. `cell` is accepted for interface compatibility with grid
// tunings and only validated.
inline double min_separation(const double* pts_a, std::size_t n_a, const double* pts_b,
                             std::size_t n_b, int dim, double cell,
                             double early_exit_below = 0.0) {
    if (n_a == 0 || n_b == 0) throw std::invalid_argument("min_separation: empty point set");
    if (cell <= 0.0) throw std::invalid_argument("min_separation: cell must be > 0");
    const detail::ChunkIndex ia(pts_a, n_a, dim), ib(pts_b, n_b, dim);
    constexpr std::size_t kChunk = detail::ChunkIndex::kChunk;

    // visit chunk pairs in order of their lower bound so `best` tightens fast
    std::vector<std::pair<double, std::pair<std::uint32_t, std::uint32_t>>> order;
    order.reserve(ia.n_chunks * ib.n_chunks);
    for (std::size_t ca = 0; ca < ia.n_chunks; ++ca)
        for (std::size_t cb = 0; cb < ib.n_chunks; ++cb) {
            const double bound = detail::pair_dist(ia.center.data() + ca * dim,
                                                   ib.center.data() + cb * dim, dim) -
                                 ia.radius[ca] - ib.radius[cb];
            order.push_back({bound, {static_cast<std::uint32_t>(ca),
                                     static_cast<std::uint32_t>(cb)}});
        }
    std::sort(order.begin(), order.end());

    double best = std::numeric_limits<double>::infinity();
    for (const auto& [bound, pair] : order) {
        // small slack so floating rounding in the bound cannot drop the pair
        // realizing the true minimum
        if (bound - 1e-9 >= best) break;
        const std::size_t alo = static_cast<std::size_t>(pair.first) * kChunk;
        const std::size_t ahi = std::min(n_a, alo + kChunk);
        const std::size_t blo = static_cast<std::size_t>(pair.second) * kChunk;
        const std::size_t bhi = std::min(n_b, blo + kChunk);
        for (std::size_t i = alo; i < ahi; ++i)
            for (std::size_t j = blo; j < bhi; ++j) {
                const double dist = detail::pair_dist(pts_a + i * dim, pts_b + j * dim, dim);
                if (dist < best) best = dist;
            }
        if (early_exit_below > 0.0 && best < early_exit_below) return best;
    }
    return best;
}

inline double min_separation(const std::vector<double>& a, const std::vector<double>& b, int dim,
                             double cell, double early_exit_below = 0.0) {
    return min_separation(a.data(), a.size() / dim, b.data(), b.size() / dim, dim, cell,
                          early_exit_below);
}

// O(n*m) reference for the soundness check
inline double min_separation_brute(const std::vector<double>& a, const std::vector<double>& b,
                                   int dim) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t na = a.size() / dim, nb = b.size() / dim;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            best = std::min(best, detail::pair_dist(a.data() + i * dim, b.data() + j * dim, dim));
    return best;
}

namespace detail {

// Brownian-bridge refinement of one grid step into `factor` substeps. Seeded
// per step index so refined paths are reproducible and shared across
// candidates.
inline void refine_step(const double* x0, const double* x1, int d, double dt, int factor,
                        std::uint64_t seed, std::vector<double>& out) {
    Rng rng(seed);
    const double sub = dt / factor;
    std::vector<double> cur(x0, x0 + d);
    for (int k = 1; k < factor; ++k) {
        const double rem = dt - (k - 1) * sub;
        const double var = sub * (rem - sub) / rem;
        const double sd = std::sqrt(std::max(var, 0.0));
        for (int c = 0; c < d; ++c) {
            cur[c] += (x1[c] - cur[c]) * sub / rem + sd * rng.normal();
            out.push_back(cur[c]);
        }
    }
}

}  // namespace detail

// Cut detection on the Brownian block: integer time n is a cut iff
// Lambda_{n-1} = 1 and the R-neighborhoods of the (windowed) past up to n-1
// and future from n are disjoint, i.e. the point-set separation exceeds 2R.
// A margin band around 2R absorbs the sub-grid path modulus; band candidates
// are re-examined on a bridge-refined grid (factor 4, one level).
inline CutRecord detect_cut_times(const std::vector<double>& x1, int d1, double dt,
                                  const std::vector<int>& lambdas, const CutConfig& ccfg,
                                  std::uint64_t refine_seed = 0x2ef1) {
    ccfg.validate();
    const std::size_t nodes = x1.size() / d1;
    if (nodes < 2) throw std::invalid_argument("detect_cut_times: path too short");
    const std::size_t steps_per_unit = static_cast<std::size_t>(std::llround(1.0 / dt));
    const long horizon = static_cast<long>((nodes - 1) / steps_per_unit);
    const long wp = static_cast<long>(std::ceil(ccfg.window_past));
    const long wf = static_cast<long>(std::ceil(ccfg.window_future));
    if (horizon < wp + wf + 1)
        throw std::invalid_argument("detect_cut_times: horizon shorter than the windows");

    const double R = ccfg.range_R;
    const double margin = ccfg.margin_value();
    const double cell = 2.0 * R;  // one shell suffices for the < 2R early exit

    CutRecord rec;
    rec.first_candidate = 1;
    rec.last_candidate = horizon - wf;

    for (long n = rec.first_candidate; n <= rec.last_candidate; ++n) {
        if (n - 1 >= static_cast<long>(lambdas.size()) || lambdas[n - 1] != 1) continue;
        const long past_lo_unit = std::max<long>(0, n - 1 - wp);
        // nodes of [past_lo, n-1] and [n, n+wf]; the unit interval (n-1, n) is
        // in neither set
        const std::size_t pa = static_cast<std::size_t>(past_lo_unit) * steps_per_unit;
        const std::size_t pb = static_cast<std::size_t>(n - 1) * steps_per_unit;
        const std::size_t fa = static_cast<std::size_t>(n) * steps_per_unit;
        const std::size_t fb = static_cast<std::size_t>(n + wf) * steps_per_unit;
        // cheap rejection first: unit-node subsets are subsets of the full
        // grids, so a close coarse pair certifies "no cut" without hashing
        {
            double coarse = std::numeric_limits<double>::infinity();
            const double reject_below = 2.0 * R - margin;
            for (std::size_t p = pa; p <= pb && coarse >= reject_below; p += steps_per_unit)
                for (std::size_t f = fa; f <= fb; f += steps_per_unit) {
                    const double dpf = detail::pair_dist(x1.data() + p * d1, x1.data() + f * d1, d1);
                    if (dpf < coarse) coarse = dpf;
                }
            if (coarse < reject_below) continue;
        }
        const double sep = min_separation(x1.data() + pa * d1, pb - pa + 1, x1.data() + fa * d1,
                                          fb - fa + 1, d1, cell, 2.0 * R - margin);
        bool is_cut = false;
        double sep_final = sep;
        if (sep > 2.0 * R + margin) {
            is_cut = true;
        } else if (sep >= 2.0 * R - margin) {
            // band: re-examine at dt/4
            std::vector<double> past_ref(x1.begin() + pa * d1, x1.begin() + (pb + 1) * d1);
            std::vector<double> fut_ref(x1.begin() + fa * d1, x1.begin() + (fb + 1) * d1);
            for (std::size_t k = pa; k < pb; ++k)
                detail::refine_step(x1.data() + k * d1, x1.data() + (k + 1) * d1, d1, dt, 4,
                                    hash_combine(refine_seed, k), past_ref);
            for (std::size_t k = fa; k < fb; ++k)
                detail::refine_step(x1.data() + k * d1, x1.data() + (k + 1) * d1, d1, dt, 4,
                                    hash_combine(refine_seed, k), fut_ref);
            sep_final = min_separation(past_ref, fut_ref, d1, cell, 2.0 * R);
            is_cut = sep_final > 2.0 * R + margin;
        }
        if (is_cut) {
            rec.cut_indices.push_back(n);
            rec.separations.push_back(sep_final);
            rec.truncated.push_back(n - 1 - wp < 0 || n + wf > horizon);
        }
    }
    return rec;
}

struct CutStatistics {
    double p0_hat = 0.0;
    double p0_se = 0.0;
    double spacing_mean = 0.0;
    std::size_t n_cuts = 0;
    std::size_t n_spacings = 0;
    std::vector<std::pair<long, double>> tail;  // (n, empirical P[T^1 > n])
    double fitted_tail_exponent = 0.0;          // log-log slope over the top decade
    bool tail_fit_valid = false;
};

inline CutStatistics cut_statistics(const std::vector<CutRecord>& records) {
    if (records.size() < 100) throw std::invalid_argument("cut_statistics: need >= 100 records");
    CutStatistics st;
    RunningStat rate;
    std::vector<long> spacings;
    for (const auto& r : records) {
        if (r.n_candidates() > 0)
            rate.add(static_cast<double>(r.cut_indices.size()) / static_cast<double>(r.n_candidates()));
        st.n_cuts += r.cut_indices.size();
        for (std::size_t i = 1; i < r.cut_indices.size(); ++i)
            spacings.push_back(r.cut_indices[i] - r.cut_indices[i - 1]);
    }
    st.p0_hat = rate.mean();
    st.p0_se = rate.std_error();
    st.n_spacings = spacings.size();
    if (spacings.empty()) return st;  // partial report
    double sum = 0.0;
    long max_sp = 0;
    for (long s : spacings) {
        sum += static_cast<double>(s);
        max_sp = std::max(max_sp, s);
    }
    st.spacing_mean = sum / static_cast<double>(spacings.size());
    // empirical survival P[T^1 > n] from the spacing histogram
    std::vector<std::size_t> hist(static_cast<std::size_t>(max_sp) + 1, 0);
    for (long s : spacings) ++hist[static_cast<std::size_t>(s)];
    std::size_t exceed = spacings.size();
    for (long n = 0; n <= max_sp; ++n) {
        exceed -= hist[static_cast<std::size_t>(n)];
        st.tail.emplace_back(n, static_cast<double>(exceed) / static_cast<double>(spacings.size()));
    }
    // log-log regression over the largest decade with nonzero survival
    const long hi = max_sp;
    const long lo = std::max<long>(1, hi / 10);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (const auto& [n, surv] : st.tail) {
        if (n < lo || n > hi || surv <= 0.0) continue;
        const double lx = std::log(static_cast<double>(n));
        const double ly = std::log(surv);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m >= 3) {
        const double denom = static_cast<double>(m) * sxx - sx * sx;
        if (denom > 0.0) {
            st.fitted_tail_exponent = (static_cast<double>(m) * sxy - sx * sy) / denom;
            st.tail_fit_valid = true;
        }
    }
    return st;
}

inline void write_cut_record_csv(std::ostream& os, const CutRecord& rec) {
    os << "n,separation,truncated\n";
    char buf[80];
    for (std::size_t i = 0; i < rec.cut_indices.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%d\n", rec.cut_indices[i], rec.separations[i],
                      rec.truncated[i] ? 1 : 0);
        os << buf;
    }
}

}  // namespace cutflow
