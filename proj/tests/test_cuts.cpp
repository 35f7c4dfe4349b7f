#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cutflow/cuts.hpp"
#include "cutflow/dynamics.hpp"
#include "cutflow/rng.hpp"

using namespace cutflow;

namespace {
std::vector<double> random_cloud(Rng& rng, std::size_t n, int d, double box) {
    std::vector<double> pts(n * d);
    for (double& c : pts) c = rng.uniform(-box, box);
    return pts;
}

// straight-line d1-path with the given speed along the first axis
std::vector<double> line_path(int d1, std::size_t nodes, double dt, double speed) {
    std::vector<double> x(nodes * d1, 0.0);
    for (std::size_t k = 0; k < nodes; ++k) x[k * d1] = speed * dt * static_cast<double>(k);
    return x;
}

std::vector<int> bernoulli_marks(std::size_t n, double eps, std::uint64_t seed) {
    Rng rng(hash_combine(seed, 0xbe12));
    std::vector<int> marks(n);
    for (auto& m : marks) m = rng.uniform() < eps ? 1 : 0;
    return marks;
}
}  // namespace

TEST_CASE("min_separation exact cases") {
    SUBCASE("identical sets touch") {
        Rng rng(1);
        const auto a = random_cloud(rng, 50, 3, 2.0);
        CHECK(min_separation(a, a, 3, 0.7) == 0.0);
    }
    SUBCASE("parallel node lines at offset h") {
        const int d = 2;
        std::vector<double> a, b;
        for (int k = 0; k < 100; ++k) {
            a.push_back(0.1 * k); a.push_back(0.0);
            b.push_back(0.1 * k + 0.05); b.push_back(0.8);
        }
        const double expect = std::sqrt(0.05 * 0.05 + 0.8 * 0.8);
        CHECK(min_separation(a, b, d, 0.5) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("matches brute force on random clouds") {
        Rng rng(2);
        for (int trial = 0; trial < 20; ++trial) {
            const auto a = random_cloud(rng, 200, 3, 3.0);
            const auto b = random_cloud(rng, 150, 3, 3.0);
            const double brute = min_separation_brute(a, b, 3);
            for (double cell : {0.3, 1.0, 2.5})
                CHECK(min_separation(a, b, 3, cell) == brute);
        }
    }
    SUBCASE("early exit returns a certified close pair") {
        Rng rng(3);
        const auto a = random_cloud(rng, 300, 3, 2.0);
        const auto b = random_cloud(rng, 300, 3, 2.0);
        const double brute = min_separation_brute(a, b, 3);
        const double thr = 2.0 * brute + 0.1;
        const double fast = min_separation(a, b, 3, 0.8, thr);
        CHECK(fast < thr);
        CHECK(fast >= brute);  // any returned pair distance is a real distance
    }
    SUBCASE("validation") {
        std::vector<double> a = {0.0, 0.0}, empty;
        CHECK_THROWS_AS(min_separation(a, empty, 2, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(min_separation(a, a, 2, 0.0), std::invalid_argument);
    }
}

TEST_CASE("no marks, no cuts") {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.horizon_T = 40.0;
    cfg.path_seed = 11;
    const auto w = brownian_block(5, cfg);
    CutConfig ccfg;
    ccfg.window_past = 10.0;
    ccfg.window_future = 10.0;
    const std::vector<int> none(40, 0);
    const CutRecord rec = detect_cut_times(w, 5, cfg.dt, none, ccfg);
    CHECK(rec.cut_indices.empty());
    CHECK(rec.n_candidates() == 30);
}

TEST_CASE("fast straight path cuts at every marked time") {
    const double dt = 1e-2;
    const std::size_t units = 30;
    CutConfig ccfg;
    ccfg.window_past = 5.0;
    ccfg.window_future = 5.0;
    // speed 2 per unit: the omitted unit interval (n-1, n) leaves a gap of 2,
    // beyond 2R + margin = 1.05 even without refinement
    const auto x = line_path(3, units * 100 + 1, dt, 2.0);
    const std::vector<int> all(units, 1);
    const CutRecord rec = detect_cut_times(x, 3, dt, all, ccfg);
    CHECK(rec.cut_indices.size() == static_cast<std::size_t>(rec.n_candidates()));
    for (std::size_t i = 0; i < rec.cut_indices.size(); ++i) {
        CHECK(rec.separations[i] == doctest::Approx(2.0).epsilon(1e-9));
        CHECK_FALSE(static_cast<bool>(rec.truncated[i] && rec.cut_indices[i] > 5));
    }
}

TEST_CASE("slow straight path never cuts") {
    const double dt = 1e-2;
    const std::size_t units = 30;
    CutConfig ccfg;
    ccfg.window_past = 5.0;
    ccfg.window_future = 5.0;
    const auto x = line_path(3, units * 100 + 1, dt, 0.5);  // gap 0.5 < 2R - margin
    const std::vector<int> all(units, 1);
    CHECK(detect_cut_times(x, 3, dt, all, ccfg).cut_indices.empty());
}

TEST_CASE("cuts only occur at marked times and are deterministic") {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.horizon_T = 80.0;
    cfg.path_seed = 21;
    const int d1 = 5;
    const auto w = brownian_block(d1, cfg);
    CutConfig ccfg;
    ccfg.window_past = 15.0;
    ccfg.window_future = 15.0;
    const auto marks = bernoulli_marks(80, 0.5, 22);
    const CutRecord rec = detect_cut_times(w, d1, cfg.dt, marks, ccfg);
    for (long n : rec.cut_indices) REQUIRE(marks[n - 1] == 1);
    const CutRecord again = detect_cut_times(w, d1, cfg.dt, marks, ccfg);
    REQUIRE(again.cut_indices == rec.cut_indices);
    for (std::size_t i = 0; i < rec.separations.size(); ++i)
        CHECK(again.separations[i] == rec.separations[i]);
}

TEST_CASE("longer windows only remove cuts") {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.horizon_T = 60.0;
    cfg.path_seed = 31;
    const int d1 = 5;
    const auto w = brownian_block(d1, cfg);
    const auto marks = bernoulli_marks(60, 1.0, 32);
    CutConfig small_w, large_w;
    small_w.window_past = 5.0;
    small_w.window_future = 5.0;
    large_w.window_past = 20.0;
    large_w.window_future = 20.0;
    const CutRecord rs = detect_cut_times(w, d1, cfg.dt, marks, small_w);
    const CutRecord rl = detect_cut_times(w, d1, cfg.dt, marks, large_w);
    // larger windows inspect supersets of points, so every surviving cut in
    // the large-window record must also be a small-window cut
    for (long n : rl.cut_indices) {
        if (n < rs.first_candidate || n > rs.last_candidate) continue;
        CHECK(std::find(rs.cut_indices.begin(), rs.cut_indices.end(), n) != rs.cut_indices.end());
    }
}

TEST_CASE("cut statistics on the deterministic line family") {
    const double dt = 1e-2;
    const std::size_t units = 30;
    CutConfig ccfg;
    ccfg.window_past = 5.0;
    ccfg.window_future = 5.0;
    std::vector<CutRecord> records;
    for (int r = 0; r < 120; ++r) {
        const auto x = line_path(3, units * 100 + 1, dt, 2.0);
        const std::vector<int> all(units, 1);
        records.push_back(detect_cut_times(x, 3, dt, all, ccfg));
    }
    const CutStatistics st = cut_statistics(records);
    CHECK(st.p0_hat == doctest::Approx(1.0));
    CHECK(st.spacing_mean == doctest::Approx(1.0));
    CHECK(st.n_spacings == 120 * 24);
    CHECK_THROWS_AS(cut_statistics(std::vector<CutRecord>(records.begin(), records.begin() + 5)),
                    std::invalid_argument);
}

TEST_CASE("higher transient dimension cuts more often") {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.horizon_T = 60.0;
    CutConfig ccfg;
    ccfg.window_past = 15.0;
    ccfg.window_future = 15.0;
    auto p0_of = [&](int d1, std::uint64_t seed) {
        std::vector<CutRecord> records;
        for (int r = 0; r < 120; ++r) {
            SimConfig c = cfg;
            c.path_seed = hash_combine(seed, r);
            const auto w = brownian_block(d1, c);
            records.push_back(detect_cut_times(w, d1, c.dt, bernoulli_marks(60, 1.0, seed + r),
                                               ccfg));
        }
        const CutStatistics st = cut_statistics(records);
        return std::pair<double, double>(st.p0_hat, st.p0_se);
    };
    const auto [p5, se5] = p0_of(5, 41);
    const auto [p7, se7] = p0_of(7, 42);
    CHECK(p7 - p5 > 3.0 * std::sqrt(se5 * se5 + se7 * se7));
}

TEST_CASE("survival tail is a decreasing sequence starting at one") {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.horizon_T = 60.0;
    CutConfig ccfg;
    ccfg.window_past = 10.0;
    ccfg.window_future = 10.0;
    std::vector<CutRecord> records;
    for (int r = 0; r < 150; ++r) {
        SimConfig c = cfg;
        c.path_seed = hash_combine(51, r);
        const auto w = brownian_block(5, c);
        records.push_back(detect_cut_times(w, 5, c.dt, bernoulli_marks(60, 0.7, 52 + r), ccfg));
    }
    const CutStatistics st = cut_statistics(records);
    REQUIRE(st.n_spacings > 100);
    REQUIRE_FALSE(st.tail.empty());
    CHECK(st.tail.front().first == 0);
    CHECK(st.tail.front().second == 1.0);  // spacings are at least 1
    for (std::size_t i = 1; i < st.tail.size(); ++i)
        CHECK(st.tail[i].second <= st.tail[i - 1].second);
    CHECK(st.tail.back().second == 0.0);
}
