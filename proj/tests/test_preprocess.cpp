#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "difflstm/preprocess.hpp"

using namespace difflstm;

TEST_CASE("fit_scale maps endpoints and midpoint onto the target range") {
    const ScaleParams p = fit_scale({0.0, 2.0, 10.0}, -0.5, 0.5);
    CHECK(p.scale(5.0) == doctest::Approx(0.0));
    CHECK(p.scale(0.0) == -0.5);
    CHECK(p.scale(10.0) == 0.5);
}

TEST_CASE("scale then unscale is the identity") {
    const ScaleParams p = fit_scale({-3.0, 7.5}, -0.5, 0.5);
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-10.0, 10.0);
        CHECK(p.unscale(p.scale(x)) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("fit_scale rejects constant series") {
    CHECK_THROWS_AS(fit_scale({2.0, 2.0, 2.0}, -0.5, 0.5), ParamError);
    CHECK_THROWS_AS(fit_scale({1.0}, -0.5, 0.5), ParamError);
}

TEST_CASE("savitzky-golay derivative is exact on a linear series") {
    const double dt = 0.2;
    Series s{{}, dt, "lin", {}};
    for (int i = 0; i < 50; ++i) s.values.push_back(3.0 * i * dt);
    const Series d = savitzky_golay_derivative(s, {5, 3, dt});
    REQUIRE(d.size() == s.size());
    for (std::size_t i = 2; i + 2 < d.size(); ++i) {
        CHECK(d.values[i] == doctest::Approx(3.0).epsilon(1e-10));
    }
}

TEST_CASE("savitzky-golay derivative is exact on cubics at interior points") {
    const double dt = 0.1;
    auto f = [](double t) { return 2.0 * t * t * t - t * t + 4.0 * t - 1.0; };
    auto fp = [](double t) { return 6.0 * t * t - 2.0 * t + 4.0; };
    Series s{{}, dt, "cubic", {}};
    for (int i = 0; i < 60; ++i) s.values.push_back(f(i * dt));
    const Series d = savitzky_golay_derivative(s, {5, 3, dt});
    for (std::size_t i = 2; i + 2 < d.size(); ++i) {
        CHECK(std::abs(d.values[i] - fp(i * dt)) < 1e-8);
    }
}

TEST_CASE("savitzky-golay variance on white noise beats first differences") {
    Rng rng(77);
    Series s{{}, 1.0, "noise", {}};
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) s.values.push_back(rng.uniform(-1.0, 1.0));
    const Series d = savitzky_golay_derivative(s, {5, 3, 1.0});

    auto variance = [](const Vector& xs, std::size_t lo, std::size_t hi) {
        double mean = 0.0;
        for (std::size_t i = lo; i < hi; ++i) mean += xs[i];
        mean /= static_cast<double>(hi - lo);
        double ss = 0.0;
        for (std::size_t i = lo; i < hi; ++i) ss += (xs[i] - mean) * (xs[i] - mean);
        return ss / static_cast<double>(hi - lo - 1);
    };
    Vector fd(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) fd[i] = s.values[i + 1] - s.values[i];
    CHECK(variance(d.values, 2, n - 2) < variance(fd, 0, n - 1));
}

TEST_CASE("savitzky-golay parameter validation") {
    Series s{{1.0, 2.0, 3.0}, 1.0, "short", {}};
    CHECK_THROWS_AS(savitzky_golay_derivative(s, {5, 3, 1.0}), ParamError);
    Series longer{Vector(20, 1.0), 1.0, "even", {}};
    CHECK_THROWS_AS(savitzky_golay_derivative(longer, {4, 3, 1.0}), ParamError);
    CHECK_THROWS_AS(savitzky_golay_derivative(longer, {5, 5, 1.0}), ParamError);
}

TEST_CASE("fnn finds D=2 for a finely sampled sine") {
    Series s{{}, 1.0, "sine", {}};
    for (int i = 0; i < 1200; ++i) s.values.push_back(std::sin(0.07 * i));
    const FnnResult res = false_nearest_neighbors(s, 1, 8);
    CHECK(res.converged);
    CHECK(res.dim == 2);
}

TEST_CASE("fnn flags iid noise as never converging") {
    Rng rng(2024);
    Series s{{}, 1.0, "noise", {}};
    for (int i = 0; i < 600; ++i) s.values.push_back(rng.uniform(-1.0, 1.0));
    const FnnResult res = false_nearest_neighbors(s, 1, 4, 10.0, 0.01);
    CHECK_FALSE(res.converged);
    CHECK(res.dim == 4);
}

TEST_CASE("fnn rejects too-short series") {
    Series s{Vector(5, 1.0), 1.0, "tiny", {}};
    CHECK_THROWS_AS(false_nearest_neighbors(s, 1, 10), ParamError);
}

TEST_CASE("build_windows matches the index arithmetic of the window formula") {
    Series v{{}, 1.0, "ramp", {}};
    Series d{{}, 1.0, "ramp_diff", "ramp"};
    for (int i = 0; i <= 20; ++i) {
        v.values.push_back(static_cast<double>(i));
        d.values.push_back(100.0 + i);
    }
    const EmbeddingSpec spec{5, 1, 10};
    const WindowedDataset ds = build_windows(v, d, spec);

    // N = 20, so M = 20 - 4 - 10 = 6, giving 7 windows.
    CHECK(ds.count() == 7);
    CHECK(ds.X.cols == 5);
    CHECK(ds.Xd.cols == 4);
    CHECK(ds.Y.cols == 10);
    CHECK(ds.Yd.cols == 10);

    for (std::size_t j = 0; j < 5; ++j) CHECK(ds.X(0, j) == static_cast<double>(j));
    for (std::size_t k = 0; k < 10; ++k) CHECK(ds.Y(0, k) == static_cast<double>(5 + k));
    // Yd[0][k-1] = x'_{3+k}
    for (std::size_t k = 1; k <= 10; ++k) CHECK(ds.Yd(0, k - 1) == 100.0 + 3 + k);
}

TEST_CASE("build_windows never reads differentials beyond x'_{N-T}") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t D = 2 + rng.next_below(4);
        const std::size_t T = 1 + rng.next_below(3);
        const std::size_t H = 1 + rng.next_below(5);
        const std::size_t len = (D - 1) * T + H + 2 + rng.next_below(30);
        Series v{{}, 1.0, "v", {}}, d{{}, 1.0, "d", "v"};
        for (std::size_t i = 0; i < len; ++i) {
            v.values.push_back(static_cast<double>(i));
            d.values.push_back(1000.0 + static_cast<double>(i));
        }
        const WindowedDataset ds = build_windows(v, d, {D, T, H});
        const std::size_t N = len - 1;
        double max_diff_index = 0.0;
        for (double x : ds.Xd.data) max_diff_index = std::max(max_diff_index, x - 1000.0);
        for (double x : ds.Yd.data) max_diff_index = std::max(max_diff_index, x - 1000.0);
        CHECK(max_diff_index <= static_cast<double>(N - T));

        // No look-ahead: the largest input index precedes the smallest target.
        for (std::size_t t = 0; t < ds.count(); ++t) {
            CHECK(ds.X(t, D - 1) < ds.Y(t, 0));
        }
        // Reconstruction: window rows are bit-equal slices of the series.
        for (std::size_t t = 0; t < ds.count(); ++t) {
            for (std::size_t j = 0; j < D; ++j) {
                CHECK(ds.X(t, j) == v.values[t + j * T]);
            }
        }
    }
}

TEST_CASE("build_windows reports the required minimum length") {
    Series v{Vector(10, 1.0), 1.0, "v", {}};
    Series d{Vector(10, 1.0), 1.0, "d", "v"};
    CHECK_THROWS_AS(build_windows(v, d, {5, 1, 10}), ParamError);
    Series mismatched{Vector(9, 1.0), 1.0, "d", "v"};
    CHECK_THROWS_AS(build_windows(v, mismatched, {2, 1, 2}), ShapeError);
}

TEST_CASE("split_train_test floors the train count and keeps order") {
    Series v{{}, 1.0, "v", {}}, d{{}, 1.0, "d", "v"};
    for (int i = 0; i < 24; ++i) {
        v.values.push_back(static_cast<double>(i));
        d.values.push_back(static_cast<double>(i));
    }
    const WindowedDataset ds = build_windows(v, d, {5, 1, 10}); // 10 windows
    REQUIRE(ds.count() == 10);

    const auto [train, test] = split_train_test(ds, 0.6);
    CHECK(train.count() == 6);
    CHECK(test.count() == 4);
    // Chronological: every train input precedes every test input.
    CHECK(train.X(train.count() - 1, 0) < test.X(0, 0));

    // 0.6 of 7 windows floors to 4 train / 3 test.
    Series v7{{}, 1.0, "v", {}}, d7{{}, 1.0, "d", "v"};
    for (int i = 0; i < 21; ++i) {
        v7.values.push_back(static_cast<double>(i));
        d7.values.push_back(static_cast<double>(i));
    }
    const WindowedDataset ds7 = build_windows(v7, d7, {5, 1, 10});
    REQUIRE(ds7.count() == 7);
    const auto [tr7, te7] = split_train_test(ds7, 0.6);
    CHECK(tr7.count() == 4);
    CHECK(te7.count() == 3);

    CHECK_THROWS_AS(split_train_test(ds, 0.01), ParamError);
    CHECK_THROWS_AS(split_train_test(ds, 1.5), ParamError);
}

TEST_CASE("read_csv_column handles headers and column selection") {
    const std::string path = "test_read_csv_tmp.csv";
    {
        std::ofstream out(path);
        out << "date,close\nmon,1.5\ntue,2.5\nwed,3.5\n";
    }
    const Vector col = read_csv_column(path, 1);
    CHECK(col == Vector{1.5, 2.5, 3.5});
    CHECK_THROWS_AS(read_csv_column(path, 0), IoError);
    CHECK_THROWS_AS(read_csv_column("no_such_file.csv", 0), IoError);
    std::remove(path.c_str());
}
