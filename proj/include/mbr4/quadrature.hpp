#pragma once

#include <vector>

namespace mbr4 {

/// Gauss-Hermite rule for integrals against exp(-x^2): sum_i w_i f(x_i)
/// approximates the integral over the real line; polynomials of degree
/// 2n-1 are exact. Nodes ascend.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussHermiteRule& gauss_hermite(int n);

} // namespace mbr4
