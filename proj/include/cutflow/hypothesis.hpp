#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cutflow/rng.hpp"

namespace cutflow {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// regularized lower incomplete gamma P(a, x), series + continued fraction
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

// P[Chi2_k > x]
inline double chi2_sf(double x, double k) { return 1.0 - gamma_p(k / 2.0, x / 2.0); }

// Kolmogorov distribution survival Q(d) = 2 sum (-1)^{j-1} exp(-2 j^2 d^2)
inline double kolmogorov_sf(double d) {
    if (d <= 0.0) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * std::exp(-2.0 * j * j * d * d);
        s += (j % 2 == 1) ? term : -term;
        if (term < 1e-12) break;
    }
    return std::min(std::max(s, 0.0), 1.0);
}

// one-sample KS test against a cdf given as callable
template <typename Cdf>
double ks_test_pvalue(std::vector<double> sample, Cdf&& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        dmax = std::max(dmax, std::max(f - static_cast<double>(i) / n,
                                       static_cast<double>(i + 1) / n - f));
    }
    const double en = std::sqrt(n);
    return kolmogorov_sf((en + 0.12 + 0.11 / en) * dmax);
}

struct TwoSampleResult {
    double statistic = 0.0;  // energy distance between the samples
    double p_value = 1.0;    // permutation p-value
    bool reject(double alpha) const { return p_value < alpha; }
};

// Two-sample energy-distance test with a permutation null. Samples larger
// than max_points per side are thinned by a deterministic uniform subsample
// (the O(N^2) pairwise sums make full 10^4-point permutation tests
// impractical); thinning preserves the distributions being compared.
inline TwoSampleResult energy_distance_test(const std::vector<std::vector<double>>& xs,
                                            const std::vector<std::vector<double>>& ys,
                                            std::size_t n_permutations = 199,
                                            std::uint64_t seed = 0xe4e7,
                                            std::size_t max_points = 1500) {
    if (xs.size() < 2 || ys.size() < 2) throw std::invalid_argument("energy test: too few samples");
    const std::size_t dim = xs.front().size();
    for (const auto& v : xs)
        if (v.size() != dim) throw std::invalid_argument("energy test: ragged sample");
    for (const auto& v : ys)
        if (v.size() != dim) throw std::invalid_argument("energy test: ragged sample");

    Rng rng(hash_combine(seed, 0x7357));
    auto thin = [&](const std::vector<std::vector<double>>& src) {
        if (src.size() <= max_points) return src;
        std::vector<std::size_t> idx(src.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < max_points; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        std::vector<std::vector<double>> out;
        out.reserve(max_points);
        for (std::size_t i = 0; i < max_points; ++i) out.push_back(src[idx[i]]);
        return out;
    };
    const auto a = thin(xs);
    const auto b = thin(ys);
    const std::size_t n = a.size(), m = b.size(), tot = n + m;

    // pooled distance matrix (upper triangle)
    std::vector<std::vector<double>> pooled;
    pooled.reserve(tot);
    for (const auto& v : a) pooled.push_back(v);
    for (const auto& v : b) pooled.push_back(v);
    std::vector<float> dist(tot * tot, 0.0f);
    for (std::size_t i = 0; i < tot; ++i)
        for (std::size_t j = i + 1; j < tot; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double dz = pooled[i][c] - pooled[j][c];
                s += dz * dz;
            }
            const float dd = static_cast<float>(std::sqrt(s));
            dist[i * tot + j] = dd;
            dist[j * tot + i] = dd;
        }

    std::vector<std::size_t> labels(tot);
    std::iota(labels.begin(), labels.end(), 0);
    auto energy = [&](const std::vector<std::size_t>& lab) {
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < tot; ++i) {
            const bool ix = lab[i] < n;
            for (std::size_t j = i + 1; j < tot; ++j) {
                const bool jx = lab[j] < n;
                const double dd = dist[i * tot + j];
                if (ix && jx) sxx += dd;
                else if (!ix && !jx) syy += dd;
                else sxy += dd;
            }
        }
        return 2.0 * sxy / (static_cast<double>(n) * m) -
               2.0 * sxx / (static_cast<double>(n) * n) -
               2.0 * syy / (static_cast<double>(m) * m);
    };

    TwoSampleResult res;
    res.statistic = energy(labels);
    std::size_t exceed = 0;
    for (std::size_t p = 0; p < n_permutations; ++p) {
        for (std::size_t i = tot - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
            std::swap(labels[i], labels[j]);
        }
        if (energy(labels) >= res.statistic) ++exceed;
    }
    res.p_value = static_cast<double>(exceed + 1) / static_cast<double>(n_permutations + 1);
    return res;
}

struct MardiaResult {
    double skewness_stat = 0.0;  // n*b1/6, asymptotically chi2(d(d+1)(d+2)/6)
    double skewness_p = 1.0;
    double kurtosis_stat = 0.0;  // standardized b2, asymptotically N(0,1)
    double kurtosis_p = 1.0;
    bool reject(double alpha) const { return skewness_p < alpha || kurtosis_p < alpha; }
};

namespace detail {
// Cholesky of a symmetric positive definite matrix; returns false if not SPD.
inline bool cholesky(std::vector<double>& a, int d) {
    double scale = 0.0;
    for (int i = 0; i < d; ++i) scale = std::max(scale, a[i * d + i]);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i * d + j];
            for (int k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
            if (i == j) {
                // relative pivot floor: near-singular matrices must fail
                // rather than produce explosive whitening factors
                if (s <= 1e-10 * scale) return false;
                a[i * d + i] = std::sqrt(s);
            } else {
                a[i * d + j] = s / a[j * d + j];
            }
        }
        for (int j = i + 1; j < d; ++j) a[i * d + j] = 0.0;
    }
    return true;
}
}  // namespace detail

// Mardia multivariate normality diagnostics with asymptotic reference laws.
inline MardiaResult mardia_test(const std::vector<std::vector<double>>& sample) {
    const std::size_t n = sample.size();
    if (n < 10) throw std::invalid_argument("mardia_test: sample too small");
    const int d = static_cast<int>(sample.front().size());
    std::vector<double> mean(d, 0.0);
    for (const auto& x : sample)
        for (int i = 0; i < d; ++i) mean[i] += x[i];
    for (int i = 0; i < d; ++i) mean[i] /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (const auto& x : sample)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                cov[i * d + j] += (x[i] - mean[i]) * (x[j] - mean[j]);
    for (auto& c : cov) c /= static_cast<double>(n);
    // invert via Cholesky
    std::vector<double> chol = cov;
    if (!detail::cholesky(chol, d)) throw std::runtime_error("mardia_test: singular covariance");
    auto solve = [&](const std::vector<double>& rhs) {
        std::vector<double> z(d, 0.0);
        for (int i = 0; i < d; ++i) {
            double s = rhs[i];
            for (int k = 0; k < i; ++k) s -= chol[i * d + k] * z[k];
            z[i] = s / chol[i * d + i];
        }
        std::vector<double> w(d, 0.0);
        for (int i = d - 1; i >= 0; --i) {
            double s = z[i];
            for (int k = i + 1; k < d; ++k) s -= chol[k * d + i] * w[k];
            w[i] = s / chol[i * d + i];
        }
        return w;
    };
    std::vector<std::vector<double>> centered(n, std::vector<double>(d));
    std::vector<std::vector<double>> whitened(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (int i = 0; i < d; ++i) centered[a][i] = sample[a][i] - mean[i];
        whitened[a] = solve(centered[a]);
    }
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        double maa = 0.0;
        for (int i = 0; i < d; ++i) maa += centered[a][i] * whitened[a][i];
        b2 += maa * maa;
        for (std::size_t b = 0; b < n; ++b) {
            double mab = 0.0;
            for (int i = 0; i < d; ++i) mab += centered[a][i] * whitened[b][i];
            b1 += mab * mab * mab;
        }
    }
    b1 /= static_cast<double>(n) * static_cast<double>(n);
    b2 /= static_cast<double>(n);
    MardiaResult res;
    const double df = d * (d + 1.0) * (d + 2.0) / 6.0;
    res.skewness_stat = static_cast<double>(n) * b1 / 6.0;
    res.skewness_p = chi2_sf(res.skewness_stat, df);
    const double mu = d * (d + 2.0);
    const double sigma = std::sqrt(8.0 * d * (d + 2.0) / static_cast<double>(n));
    res.kurtosis_stat = (b2 - mu) / sigma;
    res.kurtosis_p = 2.0 * (1.0 - normal_cdf(std::abs(res.kurtosis_stat)));
    return res;
}

struct BallTestResult {
    double radius_p = 1.0;     // KS test of radius^d against U(0,1)
    double isotropy_p = 1.0;   // chi2 test of the mean direction vector
    bool reject(double alpha) const { return radius_p < alpha || isotropy_p < alpha; }
};

// Test that d-vectors are uniform on the unit ball: |x|^d must be U(0,1) and
// the directions isotropic (n d |mean direction|^2 is asymptotically chi2_d).
inline BallTestResult uniform_on_ball_test(const std::vector<std::vector<double>>& xs) {
    if (xs.size() < 30) throw std::invalid_argument("uniform_on_ball_test: sample too small");
    const int d = static_cast<int>(xs.front().size());
    std::vector<double> radius_pow;
    std::vector<double> mean_dir(d, 0.0);
    radius_pow.reserve(xs.size());
    for (const auto& x : xs) {
        double nn = 0.0;
        for (double xi : x) nn += xi * xi;
        const double r = std::sqrt(nn);
        radius_pow.push_back(std::pow(r, static_cast<double>(d)));
        if (r > 0.0)
            for (int i = 0; i < d; ++i) mean_dir[i] += x[i] / r;
    }
    const double n = static_cast<double>(xs.size());
    double m2 = 0.0;
    for (int i = 0; i < d; ++i) {
        mean_dir[i] /= n;
        m2 += mean_dir[i] * mean_dir[i];
    }
    BallTestResult res;
    res.radius_p = ks_test_pvalue(std::move(radius_pow),
                                  [](double v) { return std::min(std::max(v, 0.0), 1.0); });
    res.isotropy_p = chi2_sf(n * d * m2, d);
    return res;
}

struct TrendResult {
    long s_statistic = 0;  // Mann-Kendall S; negative = decreasing
    double p_value_decreasing = 1.0;  // one-sided P[S <= s | null]
    bool decreasing(double alpha) const { return p_value_decreasing < alpha; }
};

// Mann-Kendall monotone trend test, exact null by full enumeration for short
// sequences (m <= 9), normal approximation beyond.
inline TrendResult mann_kendall_decreasing(const std::vector<double>& seq) {
    const std::size_t m = seq.size();
    if (m < 3) throw std::invalid_argument("mann_kendall: need >= 3 points");
    auto s_of = [](const std::vector<double>& v) {
        long s = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j)
                s += (v[j] > v[i]) ? 1 : (v[j] < v[i] ? -1 : 0);
        return s;
    };
    TrendResult res;
    res.s_statistic = s_of(seq);
    if (m <= 9) {
        std::vector<double> perm(seq);
        std::sort(perm.begin(), perm.end());
        std::size_t total = 0, le = 0;
        do {
            ++total;
            if (s_of(perm) <= res.s_statistic) ++le;
        } while (std::next_permutation(perm.begin(), perm.end()));
        res.p_value_decreasing = static_cast<double>(le) / static_cast<double>(total);
    } else {
        const double var = m * (m - 1.0) * (2.0 * m + 5.0) / 18.0;
        const double z = (static_cast<double>(res.s_statistic) + 1.0) / std::sqrt(var);
        res.p_value_decreasing = normal_cdf(z);
    }
    return res;
}

}  // namespace cutflow
