#include "mbr4/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace mbr4 {

Lattice4::Lattice4(int n_side) : n_side_(n_side), pts_(n_side + 1) {
    if (n_side < 1) throw std::invalid_argument("Lattice4: side parameter must be >= 1");
    std::size_t p = static_cast<std::size_t>(pts_);
    count_ = p * p * p * p;
}

int wrap_distance(int delta, int n_side) {
    int m = delta % n_side;
    if (m < 0) m += n_side;
    return std::min(m, n_side - m);
}

TorusDistance torus_distance(const Vec4i& u, const Vec4i& v, int n_side) {
    if (n_side < 1) throw std::invalid_argument("torus_distance: side must be >= 1");
    TorusDistance d{};
    d.d_inf = 0;
    for (int i = 0; i < 4; ++i) {
        if (u[i] < 0 || u[i] >= n_side || v[i] < 0 || v[i] >= n_side)
            throw std::out_of_range("torus_distance: coordinate out of [0, N)");
        d.t[i] = wrap_distance(u[i] - v[i], n_side);
        d.d_inf = std::max(d.d_inf, d.t[i]);
    }
    return d;
}

int norm_l1(const Vec4i& a, const Vec4i& b) {
    int s = 0;
    for (int i = 0; i < 4; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

int norm_linf(const Vec4i& a, const Vec4i& b) {
    int s = 0;
    for (int i = 0; i < 4; ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

std::vector<Vec4i> ball(const Vec4i& x, int radius, Norm norm, const Lattice4& lattice) {
    if (!lattice.contains(x)) throw std::out_of_range("ball: center outside lattice");
    if (radius < 0) throw std::invalid_argument("ball: radius must be >= 0");
    if (norm == Norm::L2) throw std::invalid_argument("ball: L2 balls are not supported");
    std::vector<Vec4i> out;
    Vec4i lo, hi;
    for (int i = 0; i < 4; ++i) {
        lo[i] = std::max(0, x[i] - radius);
        hi[i] = std::min(lattice.n_side(), x[i] + radius);
    }
    Vec4i z;
    for (z[0] = lo[0]; z[0] <= hi[0]; ++z[0])
        for (z[1] = lo[1]; z[1] <= hi[1]; ++z[1])
            for (z[2] = lo[2]; z[2] <= hi[2]; ++z[2])
                for (z[3] = lo[3]; z[3] <= hi[3]; ++z[3]) {
                    int d = (norm == Norm::L1) ? norm_l1(z, x) : norm_linf(z, x);
                    if (d <= radius) out.push_back(z);
                }
    return out;
}

namespace {

// Knuth two-sum: s + e == a + b exactly.
inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    double bv = s - a;
    e = (a - (s - bv)) + (b - bv);
}

} // namespace

PrefixSum4::PrefixSum4(std::span<const double> grid, int n_side)
    : PrefixSum4(grid, std::array<int, 4>{n_side, n_side, n_side, n_side}) {}

PrefixSum4::PrefixSum4(std::span<const double> grid, const std::array<int, 4>& extents)
    : extents_(extents) {
    std::size_t cells = 1;
    for (int i = 0; i < 4; ++i) {
        if (extents_[i] < 1) throw std::invalid_argument("PrefixSum4: extent must be >= 1");
        dims_[i] = extents_[i] + 1;
        cells *= static_cast<std::size_t>(extents_[i]);
    }
    if (grid.size() != cells) throw std::invalid_argument("PrefixSum4: grid size mismatch");

    strides_[3] = 1;
    strides_[2] = static_cast<std::size_t>(dims_[3]);
    strides_[1] = strides_[2] * dims_[2];
    strides_[0] = strides_[1] * dims_[1];
    table_ = std::make_unique_for_overwrite<Dd[]>(strides_[0] * dims_[0]);
    Dd* t = table_.get();

    // Zero the index-0 slabs (they make the corner combination branch-free),
    // then copy the grid in, fusing the prefix pass along the contiguous
    // axis: each row becomes a running compensated sum as it is written.
    for (std::size_t i = 0; i < strides_[0]; ++i) t[i] = Dd{0.0, 0.0};
    const double* g = grid.data();
    for (int a = 1; a < dims_[0]; ++a)
        for (int b = 0; b < dims_[1]; ++b)
            for (int c = 0; c < dims_[2]; ++c) {
                Dd* row = t + a * strides_[0] + b * strides_[1] + c * strides_[2];
                if (b == 0 || c == 0) {
                    for (int d = 0; d < dims_[3]; ++d) row[d] = Dd{0.0, 0.0};
                    continue;
                }
                row[0] = Dd{0.0, 0.0};
                double hi = 0.0, lo = 0.0;
                for (int d = 1; d < dims_[3]; ++d) {
                    double s, e;
                    two_sum(hi, *g++, s, e);
                    lo += e;
                    two_sum(s, lo, hi, lo);
                    row[d] = Dd{hi, lo};
                }
            }

    // Remaining axes in memory order: the update runs over contiguous
    // spans, so consecutive cells are independent and vectorize.
    for (int axis = 2; axis >= 0; --axis) {
        const std::size_t stride = strides_[axis];
        std::size_t outer_count = 1;
        for (int a = 0; a < axis; ++a) outer_count *= static_cast<std::size_t>(dims_[a]);
        const std::size_t block = stride * static_cast<std::size_t>(dims_[axis]);
        for (std::size_t outer = 0; outer < outer_count; ++outer) {
            Dd* base = t + outer * block;
            for (int k = 1; k < dims_[axis]; ++k) {
                Dd* cur = base + static_cast<std::size_t>(k) * stride;
                const Dd* prev = cur - stride;
                for (std::size_t i = 0; i < stride; ++i) {
                    double s, e;
                    two_sum(prev[i].hi, cur[i].hi, s, e);
                    double lo = prev[i].lo + (e + cur[i].lo);
                    two_sum(s, lo, s, e);
                    cur[i] = Dd{s, e};
                }
            }
        }
    }
}

PrefixSum4::Dd PrefixSum4::corner_combine(const std::array<int, 4>& lo,
                                          const std::array<int, 4>& hi) const {
    // Inclusion-exclusion over the 16 corners of [lo, hi] (exclusive lower).
    double sh = 0.0, sl = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
        std::size_t idx = 0;
        int sign = 1;
        for (int i = 0; i < 4; ++i) {
            if (mask & (1 << i)) {
                idx += static_cast<std::size_t>(lo[i]) * strides_[i];
                sign = -sign;
            } else {
                idx += static_cast<std::size_t>(hi[i]) * strides_[i];
            }
        }
        const Dd& v = table_[idx];
        double s, e;
        two_sum(sh, sign > 0 ? v.hi : -v.hi, s, e);
        sl += e + (sign > 0 ? v.lo : -v.lo);
        sh = s;
    }
    return Dd{sh, sl};
}

double PrefixSum4::box_sum(const std::array<int, 4>& corner,
                           const std::array<int, 4>& sides) const {
    // Each axis interval [corner, corner+side-1] mod extent splits into at
    // most two plain intervals; their cross product is at most 16 boxes.
    std::array<std::array<std::array<int, 2>, 2>, 4> seg; // [axis][piece][lo,hi] inclusive
    std::array<int, 4> pieces;
    for (int i = 0; i < 4; ++i) {
        int n = extents_[i];
        int s = sides[i];
        int c = corner[i];
        if (s < 1 || s > n) throw std::invalid_argument("box_sum: side out of range");
        if (c < 0 || c >= n) throw std::out_of_range("box_sum: corner out of range");
        int end = c + s - 1;
        if (end < n) {
            seg[i][0] = {c, end};
            pieces[i] = 1;
        } else {
            seg[i][0] = {c, n - 1};
            seg[i][1] = {0, end - n};
            pieces[i] = 2;
        }
    }
    double acc_hi = 0.0, acc_lo = 0.0;
    std::array<int, 4> lo, hi;
    for (int p0 = 0; p0 < pieces[0]; ++p0)
        for (int p1 = 0; p1 < pieces[1]; ++p1)
            for (int p2 = 0; p2 < pieces[2]; ++p2)
                for (int p3 = 0; p3 < pieces[3]; ++p3) {
                    std::array<int, 4> p{p0, p1, p2, p3};
                    for (int i = 0; i < 4; ++i) {
                        lo[i] = seg[i][p[i]][0];     // exclusive in table coords
                        hi[i] = seg[i][p[i]][1] + 1; // inclusive -> +1 shift
                    }
                    Dd part = corner_combine(lo, hi);
                    double s, e;
                    two_sum(acc_hi, part.hi, s, e);
                    acc_lo += e + part.lo;
                    acc_hi = s;
                }
    return acc_hi + acc_lo;
}

double PrefixSum4::box_sum(const Vec4i& corner, int side) const {
    return box_sum(std::array<int, 4>{corner[0], corner[1], corner[2], corner[3]},
                   std::array<int, 4>{side, side, side, side});
}

} // namespace mbr4
