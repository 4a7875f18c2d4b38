#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mbr4/lattice.hpp"

namespace mbr4 {

/// One off-diagonal class of the squared-Laplacian stencil.
struct StencilTap {
    Vec4i offset;
    int value;
};

/// The 41-point stencil of the squared 4D lattice Laplacian (center -8,
/// axis neighbors +1): diagonal 72, axis distance 1 entry -16, axis
/// distance 2 entry 1, mixed e_i+e_j entry 2.
std::span<const StencilTap> biharmonic_stencil();

/// Quadratic form of the membrane Hamiltonian: A_{uv} = sum over all rows
/// w in Z^4 of L(w,u) L(w,v) with the field extended by zero outside V_N.
/// Because the row sum runs over all of Z^4 (exterior rows within distance 1
/// of the box included), A equals the constant full-lattice stencil clipped
/// to V_N x V_N; in particular A is not the square of the Dirichlet
/// Laplacian.
class PrecisionOperator {
public:
    explicit PrecisionOperator(const Lattice4& lattice);

    const Lattice4& lattice() const { return lattice_; }
    std::size_t size() const { return lattice_.vertex_count(); }

    /// Single entry, 0 whenever |u-v|_1 > 2. Both vertices must be in V_N.
    int entry(const Vec4i& u, const Vec4i& v) const;

    /// y = A x, applied as two 9-point Laplacian passes through a padded
    /// scratch grid. Reentrant: the caller owns the workspace.
    struct Workspace {
        std::vector<double> ext;  // (P+4)^4, coordinates [-2, N+2]
        std::vector<double> mid;  // same shape, Laplacian of ext
    };
    Workspace make_workspace() const;
    void matvec(std::span<const double> x, std::span<double> y, Workspace& ws) const;

    /// Coordinate-format text dump: "row col value", 1-based indices sorted
    /// by (row, col). For cross-checking against an external oracle.
    std::string dump_coordinate_text() const;

    /// Nonzero count of the clipped operator (for sizing).
    std::size_t nonzero_count() const;

private:
    Lattice4 lattice_;
};

} // namespace mbr4
