#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mbr4/field.hpp"
#include "mbr4/lattice.hpp"

namespace mbr4 {

/// Dyadic size parameter: N = 2^n.
struct DyadicDepth {
    int n;

    explicit DyadicDepth(int levels) : n(levels) {
        if (n < 1) throw std::invalid_argument("DyadicDepth: need n >= 1");
        if (n > 12) throw std::invalid_argument("DyadicDepth: n too large");
    }
    int n_side() const { return 1 << n; }
};

/// Exact covariance of the hierarchical torus field:
///   sum_{k = ceil(log2 d_inf)}^{n} 2^{-4k} prod_i (2^k - t_i(u,v)),
/// with per-coordinate torus distances t_i and the sum starting at 0 when
/// u = v. Var = n + 1 at every vertex.
double mbrw_covariance(const Vec4i& u, const Vec4i& v, DyadicDepth depth);

/// Shared dyadic ancestor count of the branching field (its covariance).
double brw_covariance(const Vec4i& u, const Vec4i& v, DyadicDepth depth);

/// One replicate of the modified branching random walk on the N-torus.
///
/// Levels k = 0..n-1 sum all 2^{4k} translated boxes containing the vertex
/// (periodic box sums over one noise grid per level, variance 2^{-4k}).
/// The top level is sampled from the exact subset decomposition of
/// prod_i (N - t_i) - sixteen independent box-sum fields with window N/2
/// along the subset axes - so the realized covariance matches
/// mbrw_covariance at every level.
class MbrwSample {
public:
    MbrwSample(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id,
               bool use_prefix_sums = true);

    DyadicDepth depth() const { return depth_; }

    /// Field value at a vertex of V_N (coordinates taken mod N).
    double value(const Vec4i& v) const;

    Field to_field() const;

private:
    DyadicDepth depth_;
    std::uint64_t seed_;
    bool use_prefix_sums_;
    std::vector<std::vector<double>> level_grids_;   // k = 0..n-1, N^4 each
    std::vector<std::vector<double>> top_grids_;     // 16 subset grids
    std::vector<std::array<int, 4>> top_extents_;
    std::vector<PrefixSum4> level_tables_;
    std::vector<PrefixSum4> top_tables_;

    double window_sum(int level, const Vec4i& v) const;
    double top_sum(int mask, const Vec4i& v) const;
};

Field sample_mbrw(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id,
                  bool use_prefix_sums = true);

/// One replicate of the branching random walk: one standard Gaussian per
/// dyadic partition box per level, theta_v = sum of the n+1 ancestors.
class BrwSample {
public:
    BrwSample(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id);

    double value(const Vec4i& v) const;
    Field to_field() const;

private:
    DyadicDepth depth_;
    std::uint64_t seed_;
    std::vector<std::vector<double>> level_grids_; // indexed by box coordinates
    std::vector<int> level_extent_;                // boxes per axis, 2^{n-k} + 1
};

Field sample_brw(DyadicDepth depth, std::uint64_t seed, std::uint64_t stream_id);

} // namespace mbr4
