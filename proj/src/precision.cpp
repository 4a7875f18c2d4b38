#include "mbr4/precision.hpp"

#include <array>
#include <cstdlib>
#include <sstream>

namespace mbr4 {

namespace {

std::vector<StencilTap> build_stencil_table() {
    std::vector<StencilTap> taps;
    taps.push_back({{0, 0, 0, 0}, 72});
    for (int i = 0; i < 4; ++i) {
        for (int s : {-1, 1}) {
            Vec4i d{0, 0, 0, 0};
            d[i] = s;
            taps.push_back({d, -16});
            d[i] = 2 * s;
            taps.push_back({d, 1});
        }
    }
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int si : {-1, 1})
                for (int sj : {-1, 1}) {
                    Vec4i d{0, 0, 0, 0};
                    d[i] = si;
                    d[j] = sj;
                    taps.push_back({d, 2});
                }
    return taps;
}

} // namespace

std::span<const StencilTap> biharmonic_stencil() {
    static const std::vector<StencilTap> taps = build_stencil_table();
    return taps;
}

PrecisionOperator::PrecisionOperator(const Lattice4& lattice) : lattice_(lattice) {
    if (lattice.n_side() < 2)
        throw std::invalid_argument("PrecisionOperator: need N >= 2 for an interior vertex");
}

int PrecisionOperator::entry(const Vec4i& u, const Vec4i& v) const {
    if (!lattice_.contains(u) || !lattice_.contains(v))
        throw std::out_of_range("PrecisionOperator::entry: vertex outside V_N");
    int l1 = 0;
    Vec4i d;
    for (int i = 0; i < 4; ++i) {
        d[i] = u[i] - v[i];
        l1 += std::abs(d[i]);
    }
    if (l1 > 2) return 0;
    for (const StencilTap& tap : biharmonic_stencil())
        if (tap.offset == d) return tap.value;
    return 0;
}

PrecisionOperator::Workspace PrecisionOperator::make_workspace() const {
    std::size_t m = static_cast<std::size_t>(lattice_.points_per_axis() + 4);
    Workspace ws;
    ws.ext.assign(m * m * m * m, 0.0);
    ws.mid.assign(m * m * m * m, 0.0);
    return ws;
}

void PrecisionOperator::matvec(std::span<const double> x, std::span<double> y,
                               Workspace& ws) const {
    const int p = lattice_.points_per_axis();
    const int m = p + 4; // coordinates shifted by +2
    const std::ptrdiff_t s2 = m, s1 = static_cast<std::ptrdiff_t>(m) * m,
                         s0 = static_cast<std::ptrdiff_t>(m) * m * m;
    if (x.size() != lattice_.vertex_count() || y.size() != lattice_.vertex_count())
        throw std::invalid_argument("matvec: size mismatch");

    double* ext = ws.ext.data();
    double* mid = ws.mid.data();

    // Embed x at [2, p+2); the two-cell margin covers both passes.
    std::size_t src = 0;
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b)
            for (int c = 0; c < p; ++c) {
                double* row = ext + (a + 2) * s0 + (b + 2) * s1 + (c + 2) * s2 + 2;
                for (int d = 0; d < p; ++d) row[d] = x[src++];
            }

    // First pass: mid = Laplacian(ext) on [1, p+3) (all rows that can be
    // nonzero for a field supported on the box).
    for (int a = 1; a < m - 1; ++a)
        for (int b = 1; b < m - 1; ++b)
            for (int c = 1; c < m - 1; ++c) {
                const double* e = ext + a * s0 + b * s1 + c * s2;
                double* o = mid + a * s0 + b * s1 + c * s2;
                for (int d = 1; d < m - 1; ++d) {
                    o[d] = e[d - 1] + e[d + 1] + e[d - s2] + e[d + s2] + e[d - s1] + e[d + s1] +
                           e[d - s0] + e[d + s0] - 8.0 * e[d];
                }
            }

    // Second pass restricted to the box: y = Laplacian(mid)|_{V_N}.
    std::size_t dst = 0;
    for (int a = 2; a < p + 2; ++a)
        for (int b = 2; b < p + 2; ++b)
            for (int c = 2; c < p + 2; ++c) {
                const double* e = mid + a * s0 + b * s1 + c * s2;
                for (int d = 2; d < p + 2; ++d) {
                    y[dst++] = e[d - 1] + e[d + 1] + e[d - s2] + e[d + s2] + e[d - s1] +
                               e[d + s1] + e[d - s0] + e[d + s0] - 8.0 * e[d];
                }
            }

    // Clear the embedded block for the next call (margins stay zero).
    src = 0;
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b)
            for (int c = 0; c < p; ++c) {
                double* row = ext + (a + 2) * s0 + (b + 2) * s1 + (c + 2) * s2 + 2;
                for (int d = 0; d < p; ++d) row[d] = 0.0;
            }
}

std::size_t PrecisionOperator::nonzero_count() const {
    const int n = lattice_.n_side();
    std::size_t count = 0;
    for (std::size_t i = 0; i < lattice_.vertex_count(); ++i) {
        Vec4i u = lattice_.vertex(i);
        for (const StencilTap& tap : biharmonic_stencil()) {
            Vec4i v;
            bool inside = true;
            for (int k = 0; k < 4; ++k) {
                v[k] = u[k] + tap.offset[k];
                if (v[k] < 0 || v[k] > n) inside = false;
            }
            if (inside) ++count;
        }
    }
    return count;
}

std::string PrecisionOperator::dump_coordinate_text() const {
    const int n = lattice_.n_side();
    std::ostringstream out;
    for (std::size_t i = 0; i < lattice_.vertex_count(); ++i) {
        Vec4i u = lattice_.vertex(i);
        // Collect this row's columns in index order.
        std::vector<std::pair<std::size_t, int>> row;
        for (const StencilTap& tap : biharmonic_stencil()) {
            Vec4i v;
            bool inside = true;
            for (int k = 0; k < 4; ++k) {
                v[k] = u[k] + tap.offset[k];
                if (v[k] < 0 || v[k] > n) inside = false;
            }
            if (inside) row.emplace_back(lattice_.index(v), tap.value);
        }
        std::sort(row.begin(), row.end());
        for (auto& [col, val] : row) out << (i + 1) << ' ' << (col + 1) << ' ' << val << '\n';
    }
    return out.str();
}

} // namespace mbr4
