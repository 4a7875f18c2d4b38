#pragma once

#include <cstdint>
#include <memory>
#include <numbers>

#include "mbr4/field.hpp"
#include "mbr4/solver.hpp"

namespace mbr4 {

/// Centering constant of the field maximum,
/// (8/pi) ln N - (3/(2 pi)) ln ln N, natural logarithms, N >= 4.
double centering(int n_side);

/// gamma = 8/pi^2: the log-correlation constant of the field.
inline constexpr double kGamma = 8.0 / (std::numbers::pi * std::numbers::pi);

/// One membrane field draw on the handle's lattice. Pure in
/// (handle, seed, stream_id): same arguments, bit-identical field.
Field sample_membrane(const SolverHandle& handle, std::uint64_t seed, std::uint64_t stream_id);

/// Interpolation coefficients for mixing two independent copies:
/// sqrt(1 - t/(g ln N)) h1 + sqrt(t/(g ln N)) h2 keeps the law.
struct DysonParams {
    double t;
    int n_side;
    double g = kGamma;

    double mix() const; // t/(g ln N), must lie in [0, 1)
};

/// The interpolated field; by construction its covariance equals the
/// membrane covariance exactly. Requires t < g ln N.
Field dysonize(const Field& h1, const Field& h2, const DysonParams& params);

} // namespace mbr4
