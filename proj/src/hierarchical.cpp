#include "mbr4/hierarchical.hpp"

#include <bit>
#include <cmath>

#include "mbr4/rng.hpp"

namespace mbr4 {

namespace {

inline int ceil_log2(int d) {
    if (d <= 1) return 0;
    return std::bit_width(static_cast<unsigned>(d - 1));
}

inline Vec4i reduce_mod(const Vec4i& v, int n) {
    Vec4i r;
    for (int i = 0; i < 4; ++i) {
        int m = v[i] % n;
        if (m < 0) m += n;
        r[i] = m;
    }
    return r;
}

// Knuth two-sum, used to keep the brute-force window sums exactly in step
// with the compensated prefix-sum tables.
inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    double bv = s - a;
    e = (a - (s - bv)) + (b - bv);
}

struct DdAcc {
    double hi = 0.0, lo = 0.0;
    void add(double v) {
        double s, e;
        two_sum(hi, v, s, e);
        lo += e;
        hi = s;
    }
    double round() const { return hi + lo; }
};

} // namespace

double mbrw_covariance(const Vec4i& u, const Vec4i& v, DyadicDepth depth) {
    const int n_side = depth.n_side();
    Vec4i uu = reduce_mod(u, n_side), vv = reduce_mod(v, n_side);
    TorusDistance d = torus_distance(uu, vv, n_side);
    double total = 0.0;
    for (int k = ceil_log2(d.d_inf); k <= depth.n; ++k) {
        const double box = static_cast<double>(1 << k);
        double prod = 1.0;
        for (int i = 0; i < 4; ++i) prod *= 1.0 - d.t[i] / box;
        total += prod;
    }
    return total;
}

double brw_covariance(const Vec4i& u, const Vec4i& v, DyadicDepth depth) {
    int shared = 0;
    for (int k = 0; k <= depth.n; ++k) {
        bool same = true;
        for (int i = 0; i < 4; ++i)
            if ((u[i] >> k) != (v[i] >> k)) same = false;
        if (same) ++shared;
    }
    return static_cast<double>(shared);
}

MbrwSample::MbrwSample(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id,
                       bool use_prefix_sums)
    : depth_(depth), seed_(seed), use_prefix_sums_(use_prefix_sums) {
    const int n_side = depth_.n_side();
    const std::size_t cells = static_cast<std::size_t>(n_side) * n_side * n_side * n_side;
    RngStream stream(seed, stream_id);

    level_grids_.resize(depth_.n);
    for (int k = 0; k < depth_.n; ++k) {
        const double sigma = std::exp2(-2.0 * k); // sqrt(2^{-4k})
        auto& grid = level_grids_[k];
        grid.resize(cells);
        for (double& g : grid) g = sigma * stream.next_normal();
    }

    // Top level: one grid per axis subset S; window N/2 along S, collapsed
    // along the complement, cell variance 2^{-4n} (N/2)^{|S^c|}.
    top_grids_.resize(16);
    top_extents_.resize(16);
    const double half = n_side / 2.0;
    for (int mask = 0; mask < 16; ++mask) {
        std::array<int, 4> ext;
        int collapsed = 0;
        std::size_t sz = 1;
        for (int i = 0; i < 4; ++i) {
            bool active = (mask >> i) & 1;
            ext[i] = active ? n_side : 1;
            if (!active) ++collapsed;
            sz *= static_cast<std::size_t>(ext[i]);
        }
        const double sigma = std::exp2(-2.0 * depth_.n) * std::pow(half, 0.5 * collapsed);
        auto& grid = top_grids_[mask];
        grid.resize(sz);
        for (double& g : grid) g = sigma * stream.next_normal();
        top_extents_[mask] = ext;
    }

    if (use_prefix_sums_) {
        level_tables_.reserve(depth_.n);
        for (int k = 0; k < depth_.n; ++k) level_tables_.emplace_back(level_grids_[k], n_side);
        top_tables_.reserve(16);
        for (int mask = 0; mask < 16; ++mask)
            top_tables_.emplace_back(top_grids_[mask], top_extents_[mask]);
    }
}

double MbrwSample::window_sum(int level, const Vec4i& v) const {
    const int n_side = depth_.n_side();
    const int side = 1 << level;
    std::array<int, 4> corner;
    for (int i = 0; i < 4; ++i) {
        int c = (v[i] - (side - 1)) % n_side;
        if (c < 0) c += n_side;
        corner[i] = c;
    }
    if (use_prefix_sums_)
        return level_tables_[level].box_sum(corner, std::array<int, 4>{side, side, side, side});

    // Brute-force quadruple loop over the same grid, compensated so both
    // paths realize the identical rounded sum.
    const auto& grid = level_grids_[level];
    DdAcc acc;
    for (int a = 0; a < side; ++a) {
        std::size_t ia = static_cast<std::size_t>((corner[0] + a) % n_side);
        for (int b = 0; b < side; ++b) {
            std::size_t ib = (ia * n_side + (corner[1] + b) % n_side);
            for (int c = 0; c < side; ++c) {
                std::size_t ic = ib * n_side + (corner[2] + c) % n_side;
                for (int d = 0; d < side; ++d)
                    acc.add(grid[ic * n_side + (corner[3] + d) % n_side]);
            }
        }
    }
    return acc.round();
}

double MbrwSample::top_sum(int mask, const Vec4i& v) const {
    const int n_side = depth_.n_side();
    const int half = n_side / 2;
    std::array<int, 4> corner{0, 0, 0, 0}, sides{1, 1, 1, 1};
    for (int i = 0; i < 4; ++i) {
        if ((mask >> i) & 1) {
            int c = (v[i] - (half - 1)) % n_side;
            if (c < 0) c += n_side;
            corner[i] = c;
            sides[i] = half;
        }
    }
    if (use_prefix_sums_) return top_tables_[mask].box_sum(corner, sides);

    const auto& grid = top_grids_[mask];
    const auto& ext = top_extents_[mask];
    DdAcc acc;
    for (int a = 0; a < sides[0]; ++a) {
        std::size_t ia = static_cast<std::size_t>((corner[0] + a) % ext[0]);
        for (int b = 0; b < sides[1]; ++b) {
            std::size_t ib = ia * ext[1] + (corner[1] + b) % ext[1];
            for (int c = 0; c < sides[2]; ++c) {
                std::size_t ic = ib * ext[2] + (corner[2] + c) % ext[2];
                for (int d = 0; d < sides[3]; ++d)
                    acc.add(grid[ic * ext[3] + (corner[3] + d) % ext[3]]);
            }
        }
    }
    return acc.round();
}

double MbrwSample::value(const Vec4i& v) const {
    Vec4i vv = reduce_mod(v, depth_.n_side());
    DdAcc acc;
    for (int k = 0; k < depth_.n; ++k) acc.add(window_sum(k, vv));
    for (int mask = 0; mask < 16; ++mask) acc.add(top_sum(mask, vv));
    return acc.round();
}

Field MbrwSample::to_field() const {
    Lattice4 lat(depth_.n_side());
    Field field{lat, std::vector<double>(lat.vertex_count()), FieldKind::Mbrw, seed_};
    for (std::size_t i = 0; i < lat.vertex_count(); ++i) field.values[i] = value(lat.vertex(i));
    return field;
}

Field sample_mbrw(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id,
                  bool use_prefix_sums) {
    return MbrwSample(depth, seed, stream_id, use_prefix_sums).to_field();
}

BrwSample::BrwSample(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id)
    : depth_(depth), seed_(seed) {
    RngStream stream(seed, stream_id);
    level_grids_.resize(depth_.n + 1);
    level_extent_.resize(depth_.n + 1);
    for (int k = 0; k <= depth_.n; ++k) {
        int ext = (depth_.n_side() >> k) + 1; // box index of vertex N included
        level_extent_[k] = ext;
        std::size_t sz = static_cast<std::size_t>(ext) * ext * ext * ext;
        auto& grid = level_grids_[k];
        grid.resize(sz);
        for (double& g : grid) g = stream.next_normal();
    }
}

double BrwSample::value(const Vec4i& v) const {
    double total = 0.0;
    for (int k = 0; k <= depth_.n; ++k) {
        const int ext = level_extent_[k];
        std::size_t idx = 0;
        for (int i = 0; i < 4; ++i) idx = idx * ext + static_cast<std::size_t>(v[i] >> k);
        total += level_grids_[k][idx];
    }
    return total;
}

Field BrwSample::to_field() const {
    Lattice4 lat(depth_.n_side());
    Field field{lat, std::vector<double>(lat.vertex_count()), FieldKind::Brw, seed_};
    for (std::size_t i = 0; i < lat.vertex_count(); ++i) field.values[i] = value(lat.vertex(i));
    return field;
}

Field sample_brw(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id) {
    return BrwSample(depth, seed, stream_id).to_field();
}

} // namespace mbr4
