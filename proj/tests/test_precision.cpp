#include "doctest.h"

#include <cstdlib>
#include <map>
#include <sstream>

#include "mbr4/precision.hpp"
#include "mbr4/rng.hpp"

using namespace mbr4;

namespace {

// Laplacian row value L(w, u) for the zero-extended field: -8 at w, +1 on
// the 8 axis neighbors, regardless of where w lies in Z^4.
int laplacian_tap(const Vec4i& w, const Vec4i& u) {
    int l1 = 0;
    for (int i = 0; i < 4; ++i) l1 += std::abs(w[i] - u[i]);
    if (l1 == 0) return -8;
    return l1 == 1 ? 1 : 0;
}

// Independent oracle: sum the row products over every w in Z^4 that can
// touch u (the L1 ball of radius 1 around u, exterior sites included).
int convolution_oracle(const Vec4i& u, const Vec4i& v) {
    int total = 0;
    Vec4i w;
    for (w[0] = u[0] - 1; w[0] <= u[0] + 1; ++w[0])
        for (w[1] = u[1] - 1; w[1] <= u[1] + 1; ++w[1])
            for (w[2] = u[2] - 1; w[2] <= u[2] + 1; ++w[2])
                for (w[3] = u[3] - 1; w[3] <= u[3] + 1; ++w[3])
                    total += laplacian_tap(w, u) * laplacian_tap(w, v);
    return total;
}

} // namespace

TEST_CASE("stencil table") {
    auto taps = biharmonic_stencil();
    CHECK(taps.size() == 41);
    int diag = 0, axis1 = 0, axis2 = 0, mixed = 0, total = 0;
    for (const auto& tap : taps) {
        int l1 = std::abs(tap.offset[0]) + std::abs(tap.offset[1]) + std::abs(tap.offset[2]) +
                 std::abs(tap.offset[3]);
        total += tap.value;
        if (l1 == 0) {
            CHECK(tap.value == 72);
            ++diag;
        } else if (l1 == 1) {
            CHECK(tap.value == -16);
            ++axis1;
        } else {
            bool pure_axis = false;
            for (int i = 0; i < 4; ++i)
                if (std::abs(tap.offset[i]) == 2) pure_axis = true;
            if (pure_axis) {
                CHECK(tap.value == 1);
                ++axis2;
            } else {
                CHECK(tap.value == 2);
                ++mixed;
            }
        }
    }
    CHECK(diag == 1);
    CHECK(axis1 == 8);
    CHECK(axis2 == 8);
    CHECK(mixed == 24);
    CHECK(total == 0); // the squared Laplacian annihilates constants
}

TEST_CASE("entries match the row-product oracle at N=3") {
    Lattice4 lat(3);
    PrecisionOperator op(lat);
    for (std::size_t i = 0; i < lat.vertex_count(); ++i)
        for (std::size_t j = 0; j < lat.vertex_count(); ++j) {
            Vec4i u = lat.vertex(i), v = lat.vertex(j);
            CHECK(op.entry(u, v) == convolution_oracle(u, v));
        }
}

TEST_CASE("matvec agrees with entrywise multiplication") {
    Lattice4 lat(3);
    PrecisionOperator op(lat);
    RngStream stream(5, 0);
    std::vector<double> x(lat.vertex_count()), y(lat.vertex_count());
    for (double& v : x) v = stream.next_normal();
    auto ws = op.make_workspace();
    op.matvec(x, y, ws);
    for (std::size_t i = 0; i < lat.vertex_count(); ++i) {
        double want = 0.0;
        Vec4i u = lat.vertex(i);
        for (std::size_t j = 0; j < lat.vertex_count(); ++j)
            want += op.entry(u, lat.vertex(j)) * x[j];
        CHECK(y[i] == doctest::Approx(want).epsilon(1e-12));
    }
    // Workspace reuse leaves no residue.
    std::vector<double> y2(lat.vertex_count());
    op.matvec(x, y2, ws);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == y2[i]);
}

TEST_CASE("coordinate dump is 1-based, sorted and symmetric") {
    Lattice4 lat(2);
    PrecisionOperator op(lat);
    std::string dump = op.dump_coordinate_text();
    std::istringstream in(dump);
    std::size_t row, col, prev_row = 0, prev_col = 0, count = 0;
    long long value;
    std::map<std::pair<std::size_t, std::size_t>, long long> entries;
    while (in >> row >> col >> value) {
        CHECK(row >= 1);
        CHECK(col >= 1);
        CHECK((row > prev_row || (row == prev_row && col > prev_col)));
        prev_row = row;
        prev_col = col;
        entries[{row, col}] = value;
        ++count;
    }
    CHECK(count == op.nonzero_count());
    for (const auto& [key, v] : entries) {
        auto it = entries.find({key.second, key.first});
        REQUIRE(it != entries.end());
        CHECK(it->second == v);
    }
}

TEST_CASE("construction requires an interior vertex") {
    CHECK_THROWS_AS(PrecisionOperator(Lattice4(1)), std::invalid_argument);
}
