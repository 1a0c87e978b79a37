#include <doctest.h>

#include "mfad/calibration.hpp"
#include "mfad/error.hpp"
#include "mfad/knn.hpp"
#include "mfad/rng.hpp"
#include "support.hpp"

using namespace mfad;

TEST_CASE("knn examples") {
    const KnnIndex idx({0.0, 0.0, 3.0, 4.0}, 2, 2);
    const std::vector<double> origin = {0.0, 0.0};
    CHECK(knn_score(idx, origin) == 5.0);

    const KnnIndex one({0.0, 0.0, 3.0, 4.0}, 2, 1);
    const std::vector<double> stored = {3.0, 4.0};
    CHECK(knn_score(one, stored) == 0.0);
    CHECK(knn_score(one, stored, 1) == 5.0);
}

TEST_CASE("knn matches a full-sort oracle") {
    Rng rng(31);
    const std::uint32_t dim = 8;
    std::vector<double> stored(200 * dim);
    for (double& v : stored) v = standard_normal(rng);
    for (std::uint32_t k : {1u, 2u, 5u}) {
        const KnnIndex idx(stored, dim, k);
        for (int q = 0; q < 20; ++q) {
            std::vector<double> x(dim);
            for (double& v : x) v = standard_normal(rng);
            CHECK(knn_score(idx, x) == test::brute_knn(stored, dim, x, k));
        }
    }
}

TEST_CASE("knn errors") {
    CHECK_THROWS_AS(KnnIndex({}, 2, 1), Error);
    CHECK_THROWS_AS(KnnIndex({1.0, 2.0}, 2, 2), Error);
    CHECK_THROWS_AS(KnnIndex({1.0, 2.0}, 2, 0), Error);
    const KnnIndex idx({1.0, 2.0}, 2, 1);
    const std::vector<double> bad = {1.0};
    try {
        knn_score(idx, bad);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    try {
        knn_score(KnnIndex{}, bad);
        FAIL("expected EmptyIndex");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyIndex);
    }
}

TEST_CASE("calibration fit examples") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    CHECK(fit_calibration(a) == CalibrationStats{1.0, 3.0});
    const std::vector<double> b = {5.0};
    CHECK(fit_calibration(b) == CalibrationStats{5.0, 5.0});
    CHECK_THROWS_AS(fit_calibration(std::span<const double>{}), Error);
}

TEST_CASE("calibration apply examples") {
    const CalibrationStats s{1.0, 3.0};
    CHECK(apply_calibration(s, 2.0) == 0.5);
    CHECK(apply_calibration(s, 10.0) == 1.0);
    CHECK(apply_calibration(s, -4.0) == 0.0);
    const CalibrationStats flat{5.0, 5.0};
    CHECK(apply_calibration(flat, 5.0) == 0.0);
    CHECK(apply_calibration(flat, 4.0) == 0.0);
    CHECK(apply_calibration(flat, 5.5) == 1.0);
}

TEST_CASE("calibration is monotone and bounded") {
    Rng rng(12);
    for (int i = 0; i < 2000; ++i) {
        const double lo = 10 * standard_normal(rng);
        const CalibrationStats s{lo, lo + 5 * uniform_unit(rng)};
        double x1 = 20 * standard_normal(rng), x2 = 20 * standard_normal(rng);
        if (x1 > x2) std::swap(x1, x2);
        const double c1 = apply_calibration(s, x1), c2 = apply_calibration(s, x2);
        CHECK(c1 <= c2);
        CHECK(c1 >= 0.0);
        CHECK(c2 <= 1.0);
    }
}

TEST_CASE("stats bound every train score") {
    Rng rng(3);
    std::vector<double> stored(300 * 4);
    for (double& v : stored) v = standard_normal(rng);
    const KnnIndex idx(stored, 4, 2);
    std::vector<double> scores;
    for (std::size_t i = 0; i < idx.size(); ++i) scores.push_back(knn_score(idx, idx.row(i), i));
    const auto s = fit_calibration(scores);
    CHECK(s.train_min == *std::min_element(scores.begin(), scores.end()));
    CHECK(s.train_max == *std::max_element(scores.begin(), scores.end()));
    for (double v : scores) {
        const double c = apply_calibration(s, v);
        CHECK((c >= 0.0 && c <= 1.0));
    }
}
