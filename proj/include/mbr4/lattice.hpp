#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace mbr4 {

using Vec4i = std::array<int, 4>;

/// The box V_N = ([0,N] ∩ Z)^4 with a fixed lexicographic vertex ordering
/// (last coordinate fastest). Every index/coordinate conversion in the
/// project goes through this one ordering.
class Lattice4 {
public:
    explicit Lattice4(int n_side);

    int n_side() const { return n_side_; }
    int points_per_axis() const { return pts_; }
    std::size_t vertex_count() const { return count_; }

    bool contains(const Vec4i& v) const {
        for (int c : v)
            if (c < 0 || c > n_side_) return false;
        return true;
    }

    std::size_t index(const Vec4i& v) const {
        return ((static_cast<std::size_t>(v[0]) * pts_ + v[1]) * pts_ + v[2]) * pts_ + v[3];
    }

    Vec4i vertex(std::size_t idx) const {
        Vec4i v;
        v[3] = static_cast<int>(idx % pts_);
        idx /= pts_;
        v[2] = static_cast<int>(idx % pts_);
        idx /= pts_;
        v[1] = static_cast<int>(idx % pts_);
        v[0] = static_cast<int>(idx / pts_);
        return v;
    }

    Vec4i center() const {
        int c = n_side_ / 2;
        return {c, c, c, c};
    }

private:
    int n_side_;
    int pts_;           // n_side + 1
    std::size_t count_; // pts^4
};

/// Per-coordinate wrapped distances on the period-N torus and their maximum.
struct TorusDistance {
    std::array<int, 4> t; // each in [0, N/2]
    int d_inf;            // max_i t[i]
};

/// Wrapped distance of a single coordinate difference; well defined for any
/// integer delta and invariant under shifts by N.
int wrap_distance(int delta, int n_side);

/// t_i(u,v) = min(|u_i-v_i|, |u_i-v_i-N|, |u_i-v_i+N|) and d_inf = max_i t_i.
/// Coordinates must lie in [0, N).
TorusDistance torus_distance(const Vec4i& u, const Vec4i& v, int n_side);

enum class Norm { L1, L2, LInf };

/// {z in V_N : |z-x|_norm <= r}, sorted by lattice index. For Norm::L1 this
/// is the neighborhood the r-local maxima are taken over. Balls support L1
/// and LInf; L2 exists only for the pair-distance window.
std::vector<Vec4i> ball(const Vec4i& x, int radius, Norm norm, const Lattice4& lattice);

int norm_l1(const Vec4i& a, const Vec4i& b);
int norm_linf(const Vec4i& a, const Vec4i& b);

/// Summed-area table over a 4D periodic array, with one accumulation pass
/// per axis. Box sums with wrap-around decompose into at most 2^4 plain
/// boxes, each resolved by 16-corner inclusion-exclusion.
///
/// Sums are accumulated in compensated (double-double) arithmetic so a box
/// sum reproduces the exact value of the underlying real sum to well below
/// one ulp, independent of summation order.
class PrefixSum4 {
public:
    /// Cubic grid of extent n_side per axis (the common case).
    PrefixSum4(std::span<const double> grid, int n_side);

    /// General per-axis extents; extent 1 marks an axis the data does not
    /// vary along (used by the hierarchical samplers).
    PrefixSum4(std::span<const double> grid, const std::array<int, 4>& extents);

    int n_side() const { return extents_[0]; }
    const std::array<int, 4>& extents() const { return extents_; }

    /// Periodic box sum with per-axis corner and side; corner_i in
    /// [0, extent_i), 1 <= side_i <= extent_i.
    double box_sum(const std::array<int, 4>& corner, const std::array<int, 4>& sides) const;

    /// Cubic window, all axes share the corner/side. 1 <= side <= n_side.
    double box_sum(const Vec4i& corner, int side) const;

private:
    struct Dd {
        double hi;
        double lo;
    };
    std::array<int, 4> extents_;
    std::array<int, 4> dims_;    // extents + 1 (leading zero slab per axis)
    std::array<std::size_t, 4> strides_;
    std::unique_ptr<Dd[]> table_; // filled without redundant zero passes

    Dd corner_combine(const std::array<int, 4>& lo, const std::array<int, 4>& hi) const;
};

} // namespace mbr4
