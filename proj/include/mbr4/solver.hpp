#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbr4/precision.hpp"
#include "mbr4/rng.hpp"

namespace mbr4 {

enum class SolverMode { DirectDense, DirectBanded, Iterative };

enum class Preconditioner { FastPoisson, Jacobi };

/// Tier selection by problem size: dense direct for N <= 6, banded direct
/// for 7 <= N <= 12, preconditioned CG above that.
SolverMode default_solver_mode(int n_side);

SolverMode parse_solver_mode(const std::string& name);
std::string solver_mode_name(SolverMode mode);

struct SolverError : std::runtime_error {
    SolverError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), achieved_residual(residual), iterations(iterations) {}
    double achieved_residual;
    int iterations;
};

struct SolveInfo {
    int iterations = 0;            // 0 for direct modes
    double relative_residual = 0.0;
};

/// The membrane Hamiltonian is written with the averaged Laplacian
/// ((1/8) sum of neighbors - center), while the assembled stencil uses the
/// integer form (sum of neighbors - 8 center) so factorizations stay exact.
/// A field sample is therefore 8x the unit-stencil draw and the field
/// covariance is 64 A^{-1}; both scalings are exact powers of two.
inline constexpr double kFieldScale = 8.0;
inline constexpr double kCovarianceScale = 64.0;

/// Factorization or preconditioner state bound to one PrecisionOperator.
/// Immutable after construction; solve/sample are reentrant (per-call
/// workspaces) and safe to share across threads.
class SolverHandle {
public:
    struct Options {
        SolverMode mode;
        double tolerance = 1e-8;            // relative residual, iterative mode
        int max_iterations = 0;             // 0 -> 50 * N^2
        Preconditioner preconditioner = Preconditioner::FastPoisson;
    };

    static std::shared_ptr<const SolverHandle> create(std::shared_ptr<const PrecisionOperator> op,
                                                      const Options& options);
    static std::shared_ptr<const SolverHandle> create(std::shared_ptr<const PrecisionOperator> op);

    const PrecisionOperator& op() const { return *op_; }
    SolverMode mode() const { return options_.mode; }
    double tolerance() const { return options_.tolerance; }

    /// x with A x = b for the integer-stencil matrix A; relative residual
    /// <= tolerance (exact up to round-off in the direct modes). Throws
    /// SolverError on non-convergence.
    std::vector<double> solve(std::span<const double> b, SolveInfo* info = nullptr) const;

    /// One membrane field draw (law N(0, 64 A^{-1}), see kFieldScale).
    ///
    /// Direct modes transform white noise through the transposed Cholesky
    /// factor. Iterative mode draws white noise on every lattice site whose
    /// Laplacian row is nonzero against the zero-extended field (V_N plus
    /// the distance-1 exterior shell), forms b = L^T z and solves A h = b.
    std::vector<double> sample(RngStream& stream) const;

    /// Column v of the field covariance (Green's function), 64 A^{-1} e_v.
    std::vector<double> green_column(const Vec4i& v) const;

    /// Field variance G(v,v) for every vertex. Cheap in the direct tiers;
    /// the iterative tier runs one solve per vertex, so prefer
    /// green_column there.
    std::vector<double> green_diagonal() const;

    ~SolverHandle();

private:
    SolverHandle(std::shared_ptr<const PrecisionOperator> op, const Options& options);
    void factor_dense();
    void factor_banded();
    void prepare_iterative();
    void banded_back_solve(std::vector<double>& x) const;
    std::vector<double> solve_pcg(std::span<const double> b, SolveInfo* info) const;

    std::shared_ptr<const PrecisionOperator> op_;
    Options options_;

    // DirectDense: row-major lower Cholesky factor.
    std::vector<double> dense_factor_;

    // DirectBanded: lower band, row i holds columns [i-bw, i]. The
    // transposed copy makes back-substitution contiguous; it is skipped
    // when the extra memory would be excessive.
    std::vector<double> band_factor_;
    std::vector<double> band_factor_t_;
    int bandwidth_ = 0;

    // Iterative: separable sine transform of the squared Dirichlet
    // Laplacian on the clamped extension of the box.
    struct FastPoissonData;
    std::unique_ptr<FastPoissonData> poisson_;
};

} // namespace mbr4
