#include "doctest.h"

#include <cmath>

#include "mbr4/lattice.hpp"
#include "mbr4/rng.hpp"

using namespace mbr4;

TEST_CASE("index and vertex are mutual inverses") {
    Lattice4 lat(3);
    CHECK(lat.vertex_count() == 256);
    for (std::size_t i = 0; i < lat.vertex_count(); ++i) {
        Vec4i v = lat.vertex(i);
        CHECK(lat.contains(v));
        CHECK(lat.index(v) == i);
    }
    // Last coordinate fastest.
    CHECK(lat.index({0, 0, 0, 1}) == 1);
    CHECK(lat.index({0, 0, 1, 0}) == 4);
    CHECK(lat.index({1, 0, 0, 0}) == 64);
}

TEST_CASE("torus distances") {
    auto d0 = torus_distance({0, 0, 0, 0}, {0, 0, 0, 0}, 4);
    CHECK(d0.d_inf == 0);
    auto d1 = torus_distance({0, 0, 0, 0}, {3, 0, 0, 0}, 4);
    CHECK(d1.t == std::array<int, 4>{1, 0, 0, 0});
    CHECK(d1.d_inf == 1);
    auto d2 = torus_distance({0, 0, 0, 0}, {2, 0, 0, 0}, 4);
    CHECK(d2.t == std::array<int, 4>{2, 0, 0, 0});
    CHECK(d2.d_inf == 2);

    CHECK_THROWS_AS(torus_distance({0, 0, 0, 4}, {0, 0, 0, 0}, 4), std::out_of_range);
    CHECK_THROWS_AS(torus_distance({0, 0, 0, -1}, {0, 0, 0, 0}, 4), std::out_of_range);
}

TEST_CASE("wrap distance is symmetric and shift invariant") {
    RngStream stream(123, 0);
    for (int trial = 0; trial < 2000; ++trial) {
        int n = 2 + static_cast<int>(stream.next_u64() % 14);
        int delta = static_cast<int>(stream.next_u64() % 1000) - 500;
        int t = wrap_distance(delta, n);
        CHECK(t == wrap_distance(-delta, n));
        CHECK(t == wrap_distance(delta + n, n));
        CHECK(t == wrap_distance(delta - 3 * n, n));
        CHECK(t >= 0);
        CHECK(t <= n / 2);
        CHECK(t == std::min({std::abs(delta % n), std::abs(delta % n - n),
                             std::abs(delta % n + n)}));
    }
}

TEST_CASE("balls") {
    Lattice4 lat(4);
    SUBCASE("radius zero is the center") {
        auto b = ball({2, 2, 2, 2}, 0, Norm::L1, lat);
        REQUIRE(b.size() == 1);
        CHECK(b[0] == Vec4i{2, 2, 2, 2});
    }
    SUBCASE("interior L1 radius one has 9 vertices") {
        CHECK(ball({2, 2, 2, 2}, 1, Norm::L1, lat).size() == 9);
        CHECK(ball({2, 2, 2, 2}, 2, Norm::L1, lat).size() == 41);
    }
    SUBCASE("corner L1 radius one is clipped to 5") {
        CHECK(ball({0, 0, 0, 0}, 1, Norm::L1, lat).size() == 5);
    }
    SUBCASE("L1 ball never exceeds the LInf ball") {
        RngStream stream(7, 0);
        for (int trial = 0; trial < 50; ++trial) {
            Vec4i x;
            for (int i = 0; i < 4; ++i) x[i] = static_cast<int>(stream.next_u64() % 5);
            int r = static_cast<int>(stream.next_u64() % 4);
            CHECK(ball(x, r, Norm::L1, lat).size() <= ball(x, r, Norm::LInf, lat).size());
        }
    }
    SUBCASE("L2 balls are rejected") {
        CHECK_THROWS_AS(ball({0, 0, 0, 0}, 1, Norm::L2, lat), std::invalid_argument);
    }
}

namespace {

// Independent compensated brute-force sum over the periodic box.
double brute_box_sum(const std::vector<double>& grid, const std::array<int, 4>& ext,
                     const std::array<int, 4>& corner, const std::array<int, 4>& sides) {
    long double acc = 0.0L; // oracle only; 64-bit mantissa is plenty here
    for (int a = 0; a < sides[0]; ++a)
        for (int b = 0; b < sides[1]; ++b)
            for (int c = 0; c < sides[2]; ++c)
                for (int d = 0; d < sides[3]; ++d) {
                    std::size_t idx =
                        ((static_cast<std::size_t>((corner[0] + a) % ext[0]) * ext[1] +
                          (corner[1] + b) % ext[1]) *
                             ext[2] +
                         (corner[2] + c) % ext[2]) *
                            ext[3] +
                        (corner[3] + d) % ext[3];
                    acc += grid[idx];
                }
    return static_cast<double>(acc);
}

} // namespace

TEST_CASE("prefix sums match brute force") {
    SUBCASE("all-ones full box") {
        std::vector<double> ones(16, 1.0);
        PrefixSum4 p(ones, 2);
        CHECK(p.box_sum(Vec4i{0, 0, 0, 0}, 2) == 16.0);
        CHECK(p.box_sum(Vec4i{1, 1, 1, 1}, 2) == 16.0); // fully wrapped
        CHECK(p.box_sum(Vec4i{1, 0, 1, 0}, 1) == 1.0);
    }
    SUBCASE("1000 random grid/corner/side triples on N in {4, 8}") {
        RngStream stream(99, 1);
        for (int n : {4, 8}) {
            std::array<int, 4> ext{n, n, n, n};
            std::size_t cells = static_cast<std::size_t>(n) * n * n * n;
            std::vector<double> grid(cells);
            for (double& g : grid) g = stream.next_normal();
            PrefixSum4 p(grid, n);
            for (int trial = 0; trial < 500; ++trial) {
                std::array<int, 4> corner, sides;
                for (int i = 0; i < 4; ++i) {
                    corner[i] = static_cast<int>(stream.next_u64() % n);
                    sides[i] = 1 + static_cast<int>(stream.next_u64() % n);
                }
                double got = p.box_sum(corner, sides);
                double want = brute_box_sum(grid, ext, corner, sides);
                CHECK(got == doctest::Approx(want).epsilon(1e-13));
            }
        }
    }
    SUBCASE("argument validation") {
        std::vector<double> grid(16, 0.0);
        PrefixSum4 p(grid, 2);
        CHECK_THROWS_AS(p.box_sum(Vec4i{0, 0, 0, 0}, 3), std::invalid_argument);
        CHECK_THROWS_AS(p.box_sum(Vec4i{0, 0, 0, 0}, 0), std::invalid_argument);
        CHECK_THROWS_AS(p.box_sum(Vec4i{2, 0, 0, 0}, 1), std::out_of_range);
    }
}
