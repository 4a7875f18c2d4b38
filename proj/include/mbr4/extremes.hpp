#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mbr4/field.hpp"
#include "mbr4/lattice.hpp"

namespace mbr4 {

/// Atoms of the extremal point process: r-local maxima with rescaled
/// position x/N and height centered by the constant from centering().
struct PointProcessSample {
    struct Atom {
        Vec4i vertex;
        std::array<double, 4> position; // x/N in [0,1]^4
        double height;                  // h_x - m_N
    };
    int n_side = 0;
    int radius = 0;
    std::vector<Atom> atoms;
};

/// Vertices x with h_x equal to the maximum over the L1 ball of radius r
/// around x (clipped to the box). Ties are kept: for a constant field every
/// vertex is an atom; Gaussian fields have no ties almost surely.
PointProcessSample extract_extremal_process(const Field& h, int radius);

/// CSV with header "x1,x2,x3,x4,height", positions at 12 significant
/// digits, heights centered.
std::string point_process_csv(const PointProcessSample& pp);

/// Vertex indices with h_v >= m_N - lambda, ascending.
std::vector<std::size_t> level_set(const Field& h, double lambda);

/// Maximum of h_u + h_v over pairs at intermediate distance
/// r <= |u-v| <= N/r. Empty when r^2 > N (the window is vacuous).
struct PairStatistic {
    bool empty = true;
    double value = 0.0;
    Vec4i first{}, second{};
    int radius = 0;
    double upper_bound = 0.0; // N/r
};

/// Ties broken by the lexicographically smallest ordered pair. The norm of
/// the distance window defaults to L-infinity, with L2 behind the flag.
PairStatistic pair_max(const Field& h, int radius, Norm norm = Norm::LInf);

/// Sum of the `count` largest field values over distinct vertices.
double top_sum(const Field& h, std::size_t count);

/// The weighted exponential sum
///   sum_v (8 ln N - pi h_v) / sqrt(8) * exp(pi h_v - 8 ln N),
/// whose limit randomizes the Gumbel shift of the centered maximum.
/// Overflow-prone terms (exponent > 700) are evaluated in log space.
double derivative_martingale(const Field& h);

/// Continuous non-negative test function on [0,1]^4 x R with compact
/// support (or Gaussian-tailed after a diffusion transform).
struct TestFunction {
    std::function<double(const std::array<double, 4>&, double)> eval;
    double height_lo = 0.0, height_hi = 0.0; // support in the height variable
    bool compact_support = true;
    bool smooth = true;

    double operator()(const std::array<double, 4>& x, double h) const { return eval(x, h); }
};

/// amplitude * exp(1 - 1/(1 - s^2)) with s = (h - center)/halfwidth,
/// constant in the spatial variable. The default window [0, 3] sits just
/// above the centering constant, where the atom count is O(1) per field
/// and Laplace functionals stay well inside (0, 1).
TestFunction standard_bump(double amplitude = 1.0, double height_center = 1.5,
                           double height_halfwidth = 1.5);

/// The diffusion transform f_t(x,h) = -log E[exp(-f(x, h + W_t - pi t/2))]
/// with W_t ~ N(0,t), evaluated by Gauss-Hermite quadrature. The node
/// count starts at 41 and doubles until two successive counts agree to
/// 1e-6 on a probe grid; failure to stabilize throws. The result is
/// non-negative and no longer compactly supported (Gaussian decay).
TestFunction dyson_transform(const TestFunction& f, double t, int initial_nodes = 41);

struct LaplaceValue {
    double inner;   // <eta, f>
    double exp_neg; // e^{-inner}
};

LaplaceValue laplace_functional(const PointProcessSample& pp, const TestFunction& f);

/// True when two vertices at window distance r <= |u-v|_norm <= N/r both
/// exceed m_N - c ln ln r. Works off the level set, not an O(V^2) scan.
bool has_near_maxima_pair(const Field& h, int radius, double c, Norm norm = Norm::LInf);

} // namespace mbr4
