#pragma once

#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutflow/env.hpp"
#include "cutflow/hypothesis.hpp"
#include "cutflow/parallel.hpp"
#include "cutflow/report.hpp"
#include "cutflow/rng.hpp"

namespace cutflow {

// Stationary ergodic martingale-difference generators used to exercise the
// invariance-principle checks. gamma() returns the closed-form increment
// covariance when one exists (empty otherwise).
class DifferenceStream {
  public:
    enum class Kind {
        iid_gaussian,  // d iid N(0,1); Gamma = I
        rank_one,      // X = (xi, ..., xi); Gamma = all-ones
        ergodic_g,     // X_k = eta_k * g(X_{k-1}), eta Rademacher, g bounded
        rademacher,    // iid +-1 components, bounded; Gamma = I
        student_t3     // iid t_3 scaled to unit variance; heavy-tail control
    };

    DifferenceStream(Kind kind, int d, std::uint64_t seed)
        : kind_(kind), d_(d), rng_(hash_combine(seed, 0x5d1f)), prev_(d, 0.0) {
        if (d < 1) throw std::invalid_argument("DifferenceStream: d must be >= 1");
    }

    int dim() const { return d_; }
    Kind kind() const { return kind_; }

    Vec next() {
        Vec x(d_);
        switch (kind_) {
            case Kind::iid_gaussian:
                for (int i = 0; i < d_; ++i) x[i] = rng_.normal();
                break;
            case Kind::rank_one: {
                const double xi = rng_.normal();
                for (int i = 0; i < d_; ++i) x[i] = xi;
                break;
            }
            case Kind::ergodic_g: {
                // mean-zero given the past because eta is independent of it
                const double eta = rng_.uniform() < 0.5 ? -1.0 : 1.0;
                // per-component phase so components do not lock together
                for (int i = 0; i < d_; ++i)
                    x[i] = eta * (0.6 + 0.3 * std::sin(prev_[(i + 1) % d_] + 0.7 * prev_[i] +
                                                       0.9 * static_cast<double>(i)));
                prev_ = x;
                break;
            }
            case Kind::rademacher:
                for (int i = 0; i < d_; ++i) x[i] = rng_.uniform() < 0.5 ? -1.0 : 1.0;
                break;
            case Kind::student_t3: {
                for (int i = 0; i < d_; ++i) {
                    double chi = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        const double z = rng_.normal();
                        chi += z * z;
                    }
                    // t_3 has variance 3; rescale to unit variance
                    x[i] = rng_.normal() / std::sqrt(chi / 3.0) / std::sqrt(3.0);
                }
                break;
            }
        }
        return x;
    }

    std::vector<double> gamma() const {
        std::vector<double> g;
        switch (kind_) {
            case Kind::iid_gaussian:
            case Kind::student_t3:
            case Kind::rademacher:
                g.assign(d_ * d_, 0.0);
                for (int i = 0; i < d_; ++i) g[i * d_ + i] = 1.0;
                break;
            case Kind::rank_one:
                g.assign(d_ * d_, 1.0);
                break;
            case Kind::ergodic_g:
                break;  // no closed form; long-run oracle in tests
        }
        return g;
    }

    // |X| bound when the stream is bounded, 0 otherwise
    double sup_bound() const {
        switch (kind_) {
            case Kind::ergodic_g: return 0.9 * std::sqrt(static_cast<double>(d_));
            case Kind::rademacher: return std::sqrt(static_cast<double>(d_));
            default: return 0.0;
        }
    }

  private:
    Kind kind_;
    int d_;
    Rng rng_;
    Vec prev_;
};

inline DifferenceStream::Kind stream_kind_from_string(const std::string& s) {
    using K = DifferenceStream::Kind;
    if (s == "iid_gaussian") return K::iid_gaussian;
    if (s == "rank_one") return K::rank_one;
    if (s == "ergodic_g") return K::ergodic_g;
    if (s == "rademacher") return K::rademacher;
    if (s == "student_t3") return K::student_t3;
    throw std::invalid_argument("unknown stream kind: " + s);
}

// Piecewise-linear interpolation of partial sums on [0,1], scaled by 1/sqrt(n):
// vertex k/n carries S_k / sqrt(n).
struct PolygonalPath {
    int d = 0;
    std::vector<double> vertices;  // (n+1) * d

    std::size_t n_segments() const { return vertices.size() / d - 1; }

    Vec at(double t) const {
        if (t < 0.0 || t > 1.0) throw std::invalid_argument("PolygonalPath::at: t outside [0,1]");
        const std::size_t n = n_segments();
        const double u = t * static_cast<double>(n);
        std::size_t k = static_cast<std::size_t>(u);
        if (k >= n) k = n - 1;
        const double frac = u - static_cast<double>(k);
        Vec out(d);
        for (int i = 0; i < d; ++i)
            out[i] = (1.0 - frac) * vertices[k * d + i] + frac * vertices[(k + 1) * d + i];
        return out;
    }
};

inline PolygonalPath polygonal_rescale(const std::vector<Vec>& diffs, std::size_t n) {
    if (n < 1) throw std::invalid_argument("polygonal_rescale: n must be >= 1");
    if (diffs.size() < n) throw std::invalid_argument("polygonal_rescale: fewer than n differences");
    const int d = static_cast<int>(diffs.front().size());
    PolygonalPath path;
    path.d = d;
    path.vertices.assign((n + 1) * d, 0.0);
    const double sn = std::sqrt(static_cast<double>(n));
    Vec sum(d, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (int i = 0; i < d; ++i) {
            sum[i] += diffs[k][i];
            path.vertices[(k + 1) * d + i] = sum[i] / sn;
        }
    }
    return path;
}

struct QuadraticVariationReport {
    std::vector<double> s_grid;
    std::vector<std::vector<double>> matrices;  // per s: d x d mean of (1/n) sum X_k X_k^t
    std::vector<std::vector<double>> entry_se;  // replica scatter per entry
    std::size_t n = 0;
};

// (1/n) sum_{k <= [ns]} X_k X_k^t, plug-in products, averaged over replica
// streams; targets s * Gamma.
inline QuadraticVariationReport check_quadratic_variation(DifferenceStream::Kind kind, int d,
                                                          std::size_t n,
                                                          const std::vector<double>& s_grid,
                                                          std::size_t n_replicas,
                                                          std::uint64_t seed = 1) {
    if (n < 1000) throw std::invalid_argument("check_quadratic_variation: n must be >= 1000");
    if (n_replicas < 2) throw std::invalid_argument("check_quadratic_variation: need >= 2 replicas");
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    std::vector<RunningCov> acc(s_grid.size(), RunningCov(dd));
    std::mutex merge_mutex;
    parallel_for(n_replicas, [&](std::size_t r, unsigned) {
        DifferenceStream stream(kind, d, hash_combine(seed, 0x9a40 + r));
        std::vector<std::vector<double>> partial(s_grid.size(), std::vector<double>(dd, 0.0));
        std::vector<std::size_t> cutoffs(s_grid.size());
        for (std::size_t si = 0; si < s_grid.size(); ++si)
            cutoffs[si] = static_cast<std::size_t>(static_cast<double>(n) * s_grid[si]);
        std::vector<double> running(dd, 0.0);
        std::size_t next = 0;
        for (std::size_t k = 1; k <= n && next < s_grid.size(); ++k) {
            const Vec x = stream.next();
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) running[i * d + j] += x[i] * x[j];
            while (next < s_grid.size() && k == cutoffs[next]) {
                for (std::size_t c = 0; c < dd; ++c)
                    partial[next][c] = running[c] / static_cast<double>(n);
                ++next;
            }
        }
        std::lock_guard<std::mutex> lock(merge_mutex);
        for (std::size_t si = 0; si < s_grid.size(); ++si) acc[si].add(partial[si]);
    });
    QuadraticVariationReport rep;
    rep.s_grid = s_grid;
    rep.n = n;
    for (std::size_t si = 0; si < s_grid.size(); ++si) {
        rep.matrices.push_back(acc[si].mean());
        std::vector<double> se(dd, 0.0);
        for (std::size_t c = 0; c < dd; ++c) se[c] = acc[si].mean_se(c);
        rep.entry_se.push_back(std::move(se));
    }
    return rep;
}

// (1/n) sum_k E[|X_k|^2 1{|X_k| >= eps sqrt(n)}], empirical over replicas.
inline EstimateReport lindeberg_statistic(DifferenceStream::Kind kind, int d, std::size_t n,
                                          double eps, std::size_t n_replicas,
                                          std::uint64_t seed = 1) {
    if (n < 1000) throw std::invalid_argument("lindeberg_statistic: n must be >= 1000");
    const double threshold = eps * std::sqrt(static_cast<double>(n));
    std::vector<RunningStat> acc(thread_count());
    parallel_for(n_replicas, [&](std::size_t r, unsigned w) {
        DifferenceStream stream(kind, d, hash_combine(seed, 0x11d3 + r));
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const Vec x = stream.next();
            double nn = 0.0;
            for (double xi : x) nn += xi * xi;
            if (nn >= threshold * threshold) sum += nn;
        }
        acc[w].add(sum / static_cast<double>(n));
    });
    RunningStat total;
    for (const auto& a : acc) total.merge(a);
    return total.report();
}

struct InvarianceEntry {
    std::size_t n = 0;
    std::vector<double> endpoint_cov;  // d x d
    MardiaResult normality;
    double max_dyadic_increment_corr = 0.0;  // across disjoint quarters
    std::size_t n_replicas = 0;
};

struct InvarianceReport {
    std::vector<InvarianceEntry> entries;
};

// For each n: replicate the rescaled endpoint, estimate its covariance, run
// normality diagnostics, and check increments over disjoint dyadic quarters
// for correlation.
inline InvarianceReport invariance_report(DifferenceStream::Kind kind, int d,
                                          const std::vector<std::size_t>& n_list,
                                          std::size_t n_replicas, std::uint64_t seed = 1) {
    if (n_replicas < 50) throw std::invalid_argument("invariance_report: need >= 50 replicas");
    InvarianceReport rep;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        const std::size_t n = n_list[ni];
        std::vector<std::vector<double>> endpoints(n_replicas);
        std::vector<std::vector<double>> quarters(n_replicas);  // 4 increments x d
        parallel_for(n_replicas, [&](std::size_t r, unsigned) {
            DifferenceStream stream(kind, d, hash_combine(seed, 0x707 + ni * 1000003 + r));
            std::vector<Vec> diffs(n);
            for (std::size_t k = 0; k < n; ++k) diffs[k] = stream.next();
            const PolygonalPath path = polygonal_rescale(diffs, n);
            endpoints[r].assign(path.vertices.end() - d, path.vertices.end());
            std::vector<double> q(4 * d, 0.0);
            for (int quarter = 0; quarter < 4; ++quarter) {
                const Vec a = path.at(0.25 * quarter);
                const Vec b = path.at(0.25 * (quarter + 1));
                for (int i = 0; i < d; ++i) q[quarter * d + i] = b[i] - a[i];
            }
            quarters[r] = std::move(q);
        });
        InvarianceEntry entry;
        entry.n = n;
        entry.n_replicas = n_replicas;
        RunningCov cov(d);
        for (const auto& e : endpoints) cov.add(e);
        entry.endpoint_cov = cov.covariance();
        try {
            entry.normality = mardia_test(endpoints);
        } catch (const std::runtime_error&) {
            // degenerate covariance (e.g. the rank-one stream): whitening is
            // impossible, leave the default non-rejecting diagnostics
        }
        RunningCov qcov(4 * d);
        for (const auto& q : quarters) qcov.add(q);
        const auto qc = qcov.covariance();
        for (int qa = 0; qa < 4; ++qa)
            for (int qb = qa + 1; qb < 4; ++qb)
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) {
                        const std::size_t a = static_cast<std::size_t>(qa * d + i);
                        const std::size_t b = static_cast<std::size_t>(qb * d + j);
                        const double denom = std::sqrt(qc[a * 4 * d + a] * qc[b * 4 * d + b]);
                        if (denom <= 0.0) continue;
                        entry.max_dyadic_increment_corr = std::max(
                            entry.max_dyadic_increment_corr, std::abs(qc[a * 4 * d + b]) / denom);
                    }
        rep.entries.push_back(std::move(entry));
    }
    return rep;
}

}  // namespace cutflow
