#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cutflow/hypothesis.hpp"
#include "cutflow/rng.hpp"

using namespace cutflow;

TEST_CASE("normal cdf reference values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(normal_cdf(-3.0) + normal_cdf(3.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("regularized incomplete gamma") {
    // P(1, x) = 1 - exp(-x)
    for (double x : {0.1, 0.5, 1.0, 3.0, 10.0})
        CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
    // P(1/2, x) = erf(sqrt(x))
    for (double x : {0.2, 1.0, 4.0})
        CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
    CHECK(gamma_p(2.5, 0.0) == 0.0);
    CHECK_THROWS_AS(gamma_p(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("chi-square survival") {
    // k = 2 is exponential with mean 2
    for (double x : {0.5, 2.0, 6.0})
        CHECK(chi2_sf(x, 2.0) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
    CHECK(chi2_sf(0.0, 5.0) == doctest::Approx(1.0));
    CHECK(chi2_sf(100.0, 5.0) < 1e-10);
}

TEST_CASE("kolmogorov survival is a proper tail") {
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK(kolmogorov_sf(5.0) < 1e-10);
    double prev = 1.0;
    for (double d = 0.2; d < 3.0; d += 0.2) {
        const double cur = kolmogorov_sf(d);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("one-sample KS test") {
    Rng rng(11);
    std::vector<double> unif, shifted;
    for (int i = 0; i < 2000; ++i) {
        unif.push_back(rng.uniform());
        shifted.push_back(0.25 + 0.5 * rng.uniform());
    }
    auto cdf = [](double v) { return std::min(std::max(v, 0.0), 1.0); };
    CHECK(ks_test_pvalue(unif, cdf) > 0.01);
    CHECK(ks_test_pvalue(shifted, cdf) < 1e-6);
}

TEST_CASE("energy distance test") {
    Rng rng(21);
    auto gauss_sample = [&](std::size_t n, double shift) {
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < n; ++i)
            out.push_back({rng.normal() + shift, rng.normal()});
        return out;
    };
    SUBCASE("same law accepts") {
        const auto a = gauss_sample(400, 0.0);
        const auto b = gauss_sample(400, 0.0);
        CHECK_FALSE(energy_distance_test(a, b).reject(0.01));
    }
    SUBCASE("shifted law rejects") {
        const auto a = gauss_sample(400, 0.0);
        const auto b = gauss_sample(400, 0.8);
        CHECK(energy_distance_test(a, b).reject(0.01));
    }
    SUBCASE("thinning keeps the verdict") {
        const auto a = gauss_sample(4000, 0.0);
        const auto b = gauss_sample(4000, 0.8);
        const auto res = energy_distance_test(a, b, 199, 7, 500);
        CHECK(res.reject(0.01));
    }
}

TEST_CASE("mardia normality diagnostics") {
    Rng rng(31);
    std::vector<std::vector<double>> gauss, skewed;
    for (int i = 0; i < 800; ++i) {
        gauss.push_back({rng.normal(), rng.normal(), rng.normal()});
        skewed.push_back({-std::log(rng.uniform_pos()), rng.normal(), rng.normal()});
    }
    CHECK_FALSE(mardia_test(gauss).reject(0.001));
    CHECK(mardia_test(skewed).reject(0.001));
}

TEST_CASE("uniform-on-ball test") {
    Rng rng(41);
    const int d = 3;
    auto draw = [&](double radius_power) {
        // radius^d ~ U^(d * radius_power / d): radius_power = 1 is uniform
        std::vector<double> x(d);
        double nn = 0.0;
        for (int i = 0; i < d; ++i) { x[i] = rng.normal(); nn += x[i] * x[i]; }
        nn = std::sqrt(nn);
        const double r = std::pow(rng.uniform_pos(), radius_power / d);
        for (int i = 0; i < d; ++i) x[i] *= r / nn;
        return x;
    };
    std::vector<std::vector<double>> uniform, squashed;
    for (int i = 0; i < 2000; ++i) {
        uniform.push_back(draw(1.0));
        squashed.push_back(draw(2.0));  // mass pushed toward the center
    }
    CHECK_FALSE(uniform_on_ball_test(uniform).reject(0.005));
    CHECK(uniform_on_ball_test(squashed).reject(0.005));
}

TEST_CASE("mann-kendall trend") {
    SUBCASE("strictly decreasing short sequence, exact null") {
        std::vector<double> seq = {6.0, 5.0, 4.0, 3.0, 2.0, 1.0};
        const auto res = mann_kendall_decreasing(seq);
        CHECK(res.s_statistic == -15);
        CHECK(res.p_value_decreasing == doctest::Approx(1.0 / 720.0).epsilon(1e-12));
        CHECK(res.decreasing(0.05));
    }
    SUBCASE("increasing sequence does not register") {
        std::vector<double> seq = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
        CHECK_FALSE(mann_kendall_decreasing(seq).decreasing(0.5));
    }
    SUBCASE("long decreasing sequence, normal approximation") {
        std::vector<double> seq;
        Rng rng(51);
        for (int i = 0; i < 20; ++i) seq.push_back(20.0 - i + 0.1 * rng.normal());
        CHECK(mann_kendall_decreasing(seq).decreasing(0.01));
    }
}
