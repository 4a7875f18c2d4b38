#include "mbr4/sampler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mbr4 {

double centering(int n_side) {
    if (n_side < 4) throw std::invalid_argument("centering: need N >= 4 (ln ln N > 0)");
    const double ln_n = std::log(static_cast<double>(n_side));
    return (8.0 / std::numbers::pi) * ln_n -
           (3.0 / (2.0 * std::numbers::pi)) * std::log(ln_n);
}

Field sample_membrane(const SolverHandle& handle, std::uint64_t seed, std::uint64_t stream_id) {
    RngStream stream(seed, stream_id);
    Field field{handle.op().lattice(), handle.sample(stream), FieldKind::Membrane, seed};
    return field;
}

double DysonParams::mix() const {
    if (n_side < 2) throw std::invalid_argument("DysonParams: N too small");
    if (t < 0.0) throw std::invalid_argument("DysonParams: t must be >= 0");
    double denom = g * std::log(static_cast<double>(n_side));
    double m = t / denom;
    if (m >= 1.0)
        throw std::invalid_argument("DysonParams: t >= g ln N, interpolation undefined");
    return m;
}

Field dysonize(const Field& h1, const Field& h2, const DysonParams& params) {
    if (h1.lattice.n_side() != h2.lattice.n_side())
        throw std::invalid_argument("dysonize: lattice mismatch");
    if (h1.lattice.n_side() != params.n_side)
        throw std::invalid_argument("dysonize: params/lattice mismatch");
    const double m = params.mix();
    const double a = std::sqrt(1.0 - m);
    const double b = std::sqrt(m);
    Field out{h1.lattice, std::vector<double>(h1.values.size()), FieldKind::Interpolated, h1.seed};
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = a * h1.values[i] + b * h2.values[i];
    return out;
}

} // namespace mbr4
