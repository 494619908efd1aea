#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "volseg/distance_transform.hpp"

using namespace volseg;
using oracle::make_grid;

TEST_CASE("distance to a single voxel is the scaled Euclidean norm") {
    Mask m = Mask::zeros(make_grid({5, 5, 5}, {1, 1, 1}));
    m.set(0, 0, 0, true);
    const std::vector<double> d = distance_transform(m);
    CHECK(d[m.geom.linear(3, 0, 0)] == 3.0);
    CHECK(d[m.geom.linear(0, 0, 0)] == 0.0);
    CHECK(d[m.geom.linear(1, 1, 0)] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    Mask aniso = Mask::zeros(make_grid({3, 3, 3}, {1, 1, 2}));
    aniso.set(0, 0, 0, true);
    const std::vector<double> da = distance_transform(aniso);
    CHECK(da[aniso.geom.linear(0, 0, 1)] == 2.0);
    CHECK(da[aniso.geom.linear(1, 0, 1)] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("distance is zero exactly on the foreground") {
    const Mask m = oracle::random_mask(15, {9, 8, 7}, 0.2, {1.25, 1.25, 2.0});
    const std::vector<double> d = distance_transform_squared(m);
    for (std::size_t i = 0; i < m.voxels.size(); ++i) {
        if (m.voxels[i]) CHECK(d[i] == 0.0);
        else CHECK(d[i] > 0.0);
    }
}

TEST_CASE("empty mask has no nearest foreground") {
    const Mask m = Mask::zeros(make_grid({4, 4, 4}, {1, 1, 1}));
    CHECK_THROWS_AS(distance_transform_squared(m), EmptyMaskError);
}

TEST_CASE("separable transform equals the brute-force scan") {
    const Spacing3 spacings[] = {
        {1.0, 1.0, 1.0}, {1.0, 1.0, 2.0}, {1.25, 1.25, 1.5}, {0.78, 0.78, 2.0}};
    int s = 0;
    for (std::uint64_t seed = 100; seed < 130; ++seed, ++s) {
        oracle::Rng dims_rng(seed * 3 + 1);
        const Index3 dims{3 + dims_rng.index(10), 3 + dims_rng.index(10), 3 + dims_rng.index(10)};
        const double density = 0.02 + 0.2 * dims_rng.uniform();
        const Mask m = oracle::random_mask(seed, dims, density, spacings[s % 4]);

        const std::vector<double> got = distance_transform_squared(m);
        const std::vector<double> want = oracle::dt_squared(m);
        REQUIRE(got.size() == want.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) {
            worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(1.0, want[i]));
        }
        CAPTURE(seed);
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("integer spacings give exact integer squared distances") {
    // (5,5,6) = 4 x the paper's (1.25,1.25,1.5); (1,1,2) is its own integer grid
    const std::pair<Spacing3, Index3> cases[] = {
        {{1.0, 1.0, 2.0}, {1, 1, 2}},
        {{5.0, 5.0, 6.0}, {5, 5, 6}},
        {{39.0, 39.0, 100.0}, {39, 39, 100}}, // 50 x (0.78,0.78,2)
    };
    for (const auto& [spacing, ispacing] : cases) {
        for (std::uint64_t seed = 7; seed < 13; ++seed) {
            const Mask m = oracle::random_mask(seed, {10, 9, 8}, 0.08, spacing);
            const std::vector<double> got = distance_transform_squared(m);
            const std::vector<std::int64_t> want = oracle::dt_squared_int(m, ispacing);
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i] == static_cast<double>(want[i]));
            }
        }
    }
}

TEST_CASE("degenerate grid shapes are handled") {
    SUBCASE("single row") {
        Mask m = Mask::zeros(make_grid({7, 1, 1}, {1.5, 1, 1}));
        m.set(2, 0, 0, true);
        const std::vector<double> d = distance_transform(m);
        CHECK(d[m.geom.linear(6, 0, 0)] == 6.0);
        CHECK(d[m.geom.linear(0, 0, 0)] == 3.0);
    }
    SUBCASE("all foreground") {
        Mask m = Mask::zeros(make_grid({4, 4, 4}, {1, 1, 1}));
        for (auto& v : m.voxels) v = 1;
        for (double d : distance_transform_squared(m)) CHECK(d == 0.0);
    }
    SUBCASE("single voxel grid") {
        Mask m = Mask::zeros(make_grid({1, 1, 1}, {1, 1, 1}));
        m.set(0, 0, 0, true);
        CHECK(distance_transform(m)[0] == 0.0);
    }
}

TEST_CASE("distance_transform is the square root of the squared field") {
    const Mask m = oracle::random_mask(88, {8, 8, 8}, 0.1, {1.25, 1.4, 1.5});
    const std::vector<double> sq = distance_transform_squared(m);
    const std::vector<double> d = distance_transform(m);
    for (std::size_t i = 0; i < sq.size(); ++i) {
        CHECK(d[i] == std::sqrt(sq[i]));
    }
}
