#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cutflow {

// Scalar Monte Carlo estimate with its standard error.
struct EstimateReport {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;

    bool within_se(double target, double k_se) const {
        return std::abs(value - target) <= k_se * std_error;
    }
};

// Welford accumulator with an associative merge, so replica-parallel
// reductions are order independent up to floating point.
class RunningStat {
  public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void merge(const RunningStat& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) { *this = o; return; }
        const double nd = static_cast<double>(n_ + o.n_);
        const double d = o.mean_ - mean_;
        m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / nd;
        mean_ += d * static_cast<double>(o.n_) / nd;
        n_ += o.n_;
    }

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_dev() const { return std::sqrt(variance()); }
    double std_error() const { return n_ > 0 ? std_dev() / std::sqrt(static_cast<double>(n_)) : 0.0; }

    EstimateReport report() const { return {mean(), std_error(), n_}; }

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Streaming mean/covariance of d-dimensional samples.
class RunningCov {
  public:
    explicit RunningCov(std::size_t dim) : dim_(dim), mean_(dim, 0.0), m2_(dim * dim, 0.0) {}

    void add(const std::vector<double>& x) {
        if (x.size() != dim_) throw std::invalid_argument("RunningCov: dimension mismatch");
        ++n_;
        const double inv = 1.0 / static_cast<double>(n_);
        std::vector<double> d_old(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            d_old[i] = x[i] - mean_[i];
            mean_[i] += d_old[i] * inv;
        }
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j)
                m2_[i * dim_ + j] += d_old[i] * (x[j] - mean_[j]);
    }

    void merge(const RunningCov& o) {
        if (o.dim_ != dim_) throw std::invalid_argument("RunningCov: dimension mismatch");
        if (o.n_ == 0) return;
        if (n_ == 0) { *this = o; return; }
        const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
        const double nd = na + nb;
        std::vector<double> d(dim_);
        for (std::size_t i = 0; i < dim_; ++i) d[i] = o.mean_[i] - mean_[i];
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j)
                m2_[i * dim_ + j] += o.m2_[i * dim_ + j] + d[i] * d[j] * na * nb / nd;
        for (std::size_t i = 0; i < dim_; ++i) mean_[i] += d[i] * nb / nd;
        n_ += o.n_;
    }

    std::size_t count() const { return n_; }
    std::size_t dim() const { return dim_; }
    const std::vector<double>& mean() const { return mean_; }

    // sample covariance, row-major
    std::vector<double> covariance() const {
        std::vector<double> c(dim_ * dim_, 0.0);
        if (n_ > 1) {
            const double inv = 1.0 / static_cast<double>(n_ - 1);
            for (std::size_t k = 0; k < c.size(); ++k) c[k] = m2_[k] * inv;
        }
        return c;
    }

    double mean_se(std::size_t i) const {
        if (n_ < 2) return 0.0;
        const double var = m2_[i * dim_ + i] / static_cast<double>(n_ - 1);
        return std::sqrt(var / static_cast<double>(n_));
    }

  private:
    std::size_t dim_;
    std::size_t n_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

}  // namespace cutflow
