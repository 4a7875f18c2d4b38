#pragma once

#include <span>
#include <vector>

#include "mbr4/field.hpp"
#include "mbr4/precision.hpp"

namespace mbr4 {

/// Conditioning data for a sub-domain U of V_N: the factorized principal
/// block A_UU and the coupling block A_{U, d2U}, where d2U is the set of
/// vertices of V_N \ U within L1 distance 2 of U (the stencil has range 2,
/// so conditioning on the full exterior reduces to d2U).
///
/// Conditional law of the field on U given the rest: Gaussian with mean
/// -A_UU^{-1} A_{U,d2U} h_{d2U} and covariance 64 A_UU^{-1}; the block
/// A_UU coincides with the precision operator assembled on U directly.
class ConditionalOperators {
public:
    ConditionalOperators(const PrecisionOperator& op, const std::vector<Vec4i>& domain);

    const std::vector<std::size_t>& interior() const { return interior_; }
    const std::vector<std::size_t>& boundary() const { return boundary_; }
    const Lattice4& lattice() const { return lattice_; }

    /// A_UU entry by position within `interior`.
    double block_entry(std::size_t i, std::size_t j) const;

    /// Conditional mean on U from the field values on the boundary ring;
    /// `h` is the full field over V_N.
    std::vector<double> conditional_mean(std::span<const double> h) const;

    /// Dense conditional covariance 64 A_UU^{-1} (the field's Green
    /// function on U), row-major |U| x |U|.
    std::vector<double> conditional_covariance() const;

private:
    Lattice4 lattice_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> boundary_;
    std::vector<double> block_;      // A_UU dense row-major
    std::vector<double> factor_;     // its lower Cholesky factor
    std::vector<double> coupling_;   // A_{U, d2U} dense |U| x |d2U|
};

struct GibbsMarkovParts {
    std::vector<std::size_t> interior; // vertex indices of U, sorted
    std::vector<double> smooth;        // conditional mean given the outside
    std::vector<double> fine;          // h|_U - smooth; law of the model on U
};

/// L2 decomposition of a field over a sub-domain: the smooth part is the
/// conditional expectation given the field outside U, the fine part is an
/// independent copy of the model on U.
GibbsMarkovParts gibbs_markov_decompose(const Field& h, const ConditionalOperators& cond);

} // namespace mbr4
