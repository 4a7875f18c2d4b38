#include "mbr4/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "mbr4/solver.hpp"

namespace mbr4 {

ConditionalOperators::ConditionalOperators(const PrecisionOperator& op,
                                           const std::vector<Vec4i>& domain)
    : lattice_(op.lattice()) {
    if (domain.empty()) throw std::invalid_argument("ConditionalOperators: empty sub-domain");

    std::unordered_set<std::size_t> in_u;
    for (const Vec4i& v : domain) {
        if (!lattice_.contains(v))
            throw std::out_of_range("ConditionalOperators: vertex outside V_N");
        in_u.insert(lattice_.index(v));
    }
    interior_.assign(in_u.begin(), in_u.end());
    std::sort(interior_.begin(), interior_.end());
    if (interior_.size() > 20000)
        throw std::invalid_argument("ConditionalOperators: sub-domain too large for dense blocks");

    // d2U: exterior vertices reachable by a stencil tap from U.
    std::unordered_set<std::size_t> ring;
    const int side = lattice_.n_side();
    for (std::size_t idx : interior_) {
        Vec4i u = lattice_.vertex(idx);
        for (const StencilTap& tap : biharmonic_stencil()) {
            Vec4i w;
            bool inside = true;
            for (int k = 0; k < 4; ++k) {
                w[k] = u[k] + tap.offset[k];
                if (w[k] < 0 || w[k] > side) inside = false;
            }
            if (!inside) continue;
            std::size_t j = lattice_.index(w);
            if (!in_u.contains(j)) ring.insert(j);
        }
    }
    boundary_.assign(ring.begin(), ring.end());
    std::sort(boundary_.begin(), boundary_.end());

    const std::size_t nu = interior_.size();
    const std::size_t nb = boundary_.size();
    block_.assign(nu * nu, 0.0);
    coupling_.assign(nu * nb, 0.0);

    // Position lookups.
    std::vector<std::pair<std::size_t, std::size_t>> upos, bpos;
    upos.reserve(nu);
    for (std::size_t i = 0; i < nu; ++i) upos.emplace_back(interior_[i], i);
    bpos.reserve(nb);
    for (std::size_t i = 0; i < nb; ++i) bpos.emplace_back(boundary_[i], i);
    auto find_pos = [](const std::vector<std::pair<std::size_t, std::size_t>>& v,
                       std::size_t key) -> std::ptrdiff_t {
        auto it = std::lower_bound(v.begin(), v.end(), std::make_pair(key, std::size_t{0}));
        if (it == v.end() || it->first != key) return -1;
        return static_cast<std::ptrdiff_t>(it->second);
    };

    for (std::size_t i = 0; i < nu; ++i) {
        Vec4i u = lattice_.vertex(interior_[i]);
        for (const StencilTap& tap : biharmonic_stencil()) {
            Vec4i w;
            bool inside = true;
            for (int k = 0; k < 4; ++k) {
                w[k] = u[k] + tap.offset[k];
                if (w[k] < 0 || w[k] > side) inside = false;
            }
            if (!inside) continue;
            std::size_t j = lattice_.index(w);
            if (std::ptrdiff_t p = find_pos(upos, j); p >= 0) {
                block_[i * nu + static_cast<std::size_t>(p)] = tap.value;
            } else if (std::ptrdiff_t q = find_pos(bpos, j); q >= 0) {
                coupling_[i * nb + static_cast<std::size_t>(q)] = tap.value;
            }
        }
    }

    // Cholesky of A_UU.
    factor_ = block_;
    double* l = factor_.data();
    for (std::size_t j = 0; j < nu; ++j) {
        double* lj = l + j * nu;
        double d = lj[j];
        for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
        if (d <= 0.0) throw std::runtime_error("ConditionalOperators: A_UU not positive definite");
        lj[j] = std::sqrt(d);
        double inv = 1.0 / lj[j];
        for (std::size_t i = j + 1; i < nu; ++i) {
            double* li = l + i * nu;
            double s = li[j];
            for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            li[j] = s * inv;
        }
    }
}

double ConditionalOperators::block_entry(std::size_t i, std::size_t j) const {
    return block_[i * interior_.size() + j];
}

std::vector<double> ConditionalOperators::conditional_mean(std::span<const double> h) const {
    if (h.size() != lattice_.vertex_count())
        throw std::invalid_argument("conditional_mean: field size mismatch");
    const std::size_t nu = interior_.size();
    const std::size_t nb = boundary_.size();
    std::vector<double> rhs(nu, 0.0);
    for (std::size_t i = 0; i < nu; ++i) {
        const double* row = coupling_.data() + i * nb;
        double s = 0.0;
        for (std::size_t q = 0; q < nb; ++q) s += row[q] * h[boundary_[q]];
        rhs[i] = -s;
    }
    // Solve A_UU m = rhs through the cached factor.
    const double* l = factor_.data();
    for (std::size_t i = 0; i < nu; ++i) {
        const double* li = l + i * nu;
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= li[k] * rhs[k];
        rhs[i] = s / li[i];
    }
    for (std::size_t i = nu; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t k = i + 1; k < nu; ++k) s -= l[k * nu + i] * rhs[k];
        rhs[i] = s / l[i * nu + i];
    }
    return rhs;
}

std::vector<double> ConditionalOperators::conditional_covariance() const {
    const std::size_t nu = interior_.size();
    std::vector<double> cov(nu * nu, 0.0);
    const double* l = factor_.data();
    std::vector<double> col(nu);
    for (std::size_t c = 0; c < nu; ++c) {
        std::fill(col.begin(), col.end(), 0.0);
        col[c] = 1.0;
        for (std::size_t i = c; i < nu; ++i) {
            const double* li = l + i * nu;
            double s = col[i];
            for (std::size_t k = c; k < i; ++k) s -= li[k] * col[k];
            col[i] = s / li[i];
        }
        for (std::size_t i = nu; i-- > 0;) {
            double s = col[i];
            for (std::size_t k = i + 1; k < nu; ++k) s -= l[k * nu + i] * col[k];
            col[i] = s / l[i * nu + i];
        }
        for (std::size_t r = 0; r < nu; ++r) cov[r * nu + c] = kCovarianceScale * col[r];
    }
    return cov;
}

GibbsMarkovParts gibbs_markov_decompose(const Field& h, const ConditionalOperators& cond) {
    GibbsMarkovParts parts;
    parts.interior = cond.interior();
    parts.smooth = cond.conditional_mean(h.values);
    parts.fine.resize(parts.interior.size());
    for (std::size_t i = 0; i < parts.interior.size(); ++i)
        parts.fine[i] = h.values[parts.interior[i]] - parts.smooth[i];
    return parts;
}

} // namespace mbr4
