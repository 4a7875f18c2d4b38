#include "mbr4/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace mbr4 {

SolverMode default_solver_mode(int n_side) {
    if (n_side <= 6) return SolverMode::DirectDense;
    if (n_side <= 12) return SolverMode::DirectBanded;
    return SolverMode::Iterative;
}

SolverMode parse_solver_mode(const std::string& name) {
    if (name == "dense") return SolverMode::DirectDense;
    if (name == "banded" || name == "sparse") return SolverMode::DirectBanded;
    if (name == "iterative" || name == "pcg") return SolverMode::Iterative;
    throw std::invalid_argument("unknown solver mode: " + name);
}

std::string solver_mode_name(SolverMode mode) {
    switch (mode) {
        case SolverMode::DirectDense: return "dense";
        case SolverMode::DirectBanded: return "banded";
        case SolverMode::Iterative: return "iterative";
    }
    return "?";
}

namespace {

// Four-lane dot product; the fixed lane structure keeps results
// deterministic while letting the loop vectorize.
inline double dot4(const double* a, const double* b, std::ptrdiff_t len) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::ptrdiff_t k = 0;
    for (; k + 4 <= len; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for (; k < len; ++k) s0 += a[k] * b[k];
    return (s0 + s1) + (s2 + s3);
}

// Dense symmetric assembly from the stencil, row-major.
std::vector<double> assemble_dense(const PrecisionOperator& op) {
    const Lattice4& lat = op.lattice();
    const std::size_t n = lat.vertex_count();
    const int side = lat.n_side();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        Vec4i u = lat.vertex(i);
        for (const StencilTap& tap : biharmonic_stencil()) {
            Vec4i v;
            bool inside = true;
            for (int k = 0; k < 4; ++k) {
                v[k] = u[k] + tap.offset[k];
                if (v[k] < 0 || v[k] > side) inside = false;
            }
            if (inside) a[i * n + lat.index(v)] = tap.value;
        }
    }
    return a;
}

} // namespace

struct SolverHandle::FastPoissonData {
    int pts = 0;        // transform size per axis
    int pad = 0;        // zero-padding layers per side
    std::vector<double> sine;       // pts x pts symmetric DST-I matrix
    std::vector<double> inv_eigen;  // pts^4 inverse eigenvalues incl. normalization

    // out[..., k, ...] = sum_x sine[k, x] in[..., x, ...] along `axis`.
    void dst_axis(const double* in, double* out, int axis) const {
        const int m = pts;
        const std::ptrdiff_t strides[4] = {static_cast<std::ptrdiff_t>(m) * m * m,
                                           static_cast<std::ptrdiff_t>(m) * m, m, 1};
        const std::ptrdiff_t s = strides[axis];
        if (axis == 3) {
            // Contiguous lines: accumulate scaled rows of the (symmetric)
            // sine matrix.
            const std::ptrdiff_t lines = static_cast<std::ptrdiff_t>(m) * m * m;
            for (std::ptrdiff_t l = 0; l < lines; ++l) {
                const double* src = in + l * m;
                double* dst = out + l * m;
                std::memset(dst, 0, sizeof(double) * m);
                for (int x = 0; x < m; ++x) {
                    double v = src[x];
                    const double* row = sine.data() + static_cast<std::size_t>(x) * m;
                    for (int k = 0; k < m; ++k) dst[k] += row[k] * v;
                }
            }
            return;
        }
        // Strided axis: vectorize over the contiguous tail of length s.
        std::ptrdiff_t blocks = 1;
        for (int a = 0; a < axis; ++a) blocks *= m;
        const std::ptrdiff_t block_stride = s * m;
        for (std::ptrdiff_t b = 0; b < blocks; ++b) {
            const double* src = in + b * block_stride;
            double* dst = out + b * block_stride;
            std::memset(dst, 0, sizeof(double) * block_stride);
            for (int k = 0; k < m; ++k) {
                double* drow = dst + k * s;
                for (int x = 0; x < m; ++x) {
                    const double c = sine[static_cast<std::size_t>(k) * m + x];
                    const double* srow = src + x * s;
                    for (std::ptrdiff_t t = 0; t < s; ++t) drow[t] += c * srow[t];
                }
            }
        }
    }

    // z = (B^2)^{-1} r with B the Dirichlet Laplacian on the padded box;
    // r and z have extent p per axis, buffers have extent pts.
    void apply(const double* r, double* z, int p, std::vector<double>& t0,
               std::vector<double>& t1) const {
        const int m = pts;
        const std::ptrdiff_t m3 = static_cast<std::ptrdiff_t>(m) * m * m,
                             m2 = static_cast<std::ptrdiff_t>(m) * m;
        std::fill(t0.begin(), t0.end(), 0.0);
        // Embed with the pad offset.
        const double* src = r;
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b)
                for (int c = 0; c < p; ++c) {
                    double* row = t0.data() + (a + pad) * m3 + (b + pad) * m2 + (c + pad) * m + pad;
                    for (int d = 0; d < p; ++d) row[d] = *src++;
                }
        dst_axis(t0.data(), t1.data(), 0);
        dst_axis(t1.data(), t0.data(), 1);
        dst_axis(t0.data(), t1.data(), 2);
        dst_axis(t1.data(), t0.data(), 3);
        const double* scale = inv_eigen.data();
        double* v = t0.data();
        const std::ptrdiff_t total = m3 * m;
        for (std::ptrdiff_t i = 0; i < total; ++i) v[i] *= scale[i];
        dst_axis(t0.data(), t1.data(), 0);
        dst_axis(t1.data(), t0.data(), 1);
        dst_axis(t0.data(), t1.data(), 2);
        dst_axis(t1.data(), t0.data(), 3);
        double* dst = z;
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b)
                for (int c = 0; c < p; ++c) {
                    const double* row =
                        t0.data() + (a + pad) * m3 + (b + pad) * m2 + (c + pad) * m + pad;
                    for (int d = 0; d < p; ++d) *dst++ = row[d];
                }
    }
};

SolverHandle::SolverHandle(std::shared_ptr<const PrecisionOperator> op, const Options& options)
    : op_(std::move(op)), options_(options) {
    if (options_.max_iterations <= 0) {
        int n = op_->lattice().n_side();
        options_.max_iterations = 50 * n * n;
    }
    switch (options_.mode) {
        case SolverMode::DirectDense: factor_dense(); break;
        case SolverMode::DirectBanded: factor_banded(); break;
        case SolverMode::Iterative: prepare_iterative(); break;
    }
}

SolverHandle::~SolverHandle() = default;

std::shared_ptr<const SolverHandle> SolverHandle::create(
    std::shared_ptr<const PrecisionOperator> op, const Options& options) {
    return std::shared_ptr<const SolverHandle>(new SolverHandle(std::move(op), options));
}

std::shared_ptr<const SolverHandle> SolverHandle::create(
    std::shared_ptr<const PrecisionOperator> op) {
    Options options;
    options.mode = default_solver_mode(op->lattice().n_side());
    return create(std::move(op), options);
}

void SolverHandle::factor_dense() {
    const std::size_t n = op_->size();
    dense_factor_ = assemble_dense(*op_);
    double* l = dense_factor_.data();
    for (std::size_t j = 0; j < n; ++j) {
        double* lj = l + j * n;
        double d = lj[j] - dot4(lj, lj, static_cast<std::ptrdiff_t>(j));
        if (d <= 0.0) throw SolverError("dense Cholesky: nonpositive pivot", d, 0);
        double dj = std::sqrt(d);
        lj[j] = dj;
        double inv = 1.0 / dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double* li = l + i * n;
            li[j] = (li[j] - dot4(li, lj, static_cast<std::ptrdiff_t>(j))) * inv;
        }
    }
    // Zero the strict upper triangle so the factor can be read as-is.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) l[i * n + j] = 0.0;
}

void SolverHandle::factor_banded() {
    const Lattice4& lat = op_->lattice();
    const std::size_t n = lat.vertex_count();
    const int p = lat.points_per_axis();
    bandwidth_ = 2 * p * p * p; // offset of the +2e_0 stencil tap
    const std::size_t w = static_cast<std::size_t>(bandwidth_) + 1;
    band_factor_.assign(n * w, 0.0);
    double* band = band_factor_.data();
    const int side = lat.n_side();

    for (std::size_t i = 0; i < n; ++i) {
        Vec4i u = lat.vertex(i);
        for (const StencilTap& tap : biharmonic_stencil()) {
            Vec4i v;
            bool inside = true;
            for (int k = 0; k < 4; ++k) {
                v[k] = u[k] + tap.offset[k];
                if (v[k] < 0 || v[k] > side) inside = false;
            }
            if (!inside) continue;
            std::size_t j = lat.index(v);
            if (j <= i) band[i * w + (j + bandwidth_ - i)] = tap.value;
        }
    }

    // In-place banded Cholesky; fill stays inside the band.
    const std::ptrdiff_t bw = bandwidth_;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        double* ri = band + i * static_cast<std::ptrdiff_t>(w);
        std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, i - bw);
        for (std::ptrdiff_t j = j0; j <= i; ++j) {
            const double* rj = band + j * static_cast<std::ptrdiff_t>(w);
            std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(j0, j - bw);
            // Dot over shared columns [k0, j).
            const double* pi = ri + (k0 - i + bw);
            const double* pj = rj + (k0 - j + bw);
            double s = ri[j - i + bw] - dot4(pi, pj, j - k0);
            if (j < i) {
                ri[j - i + bw] = s / rj[bw];
            } else {
                if (s <= 0.0) throw SolverError("banded Cholesky: nonpositive pivot", s, 0);
                ri[bw] = std::sqrt(s);
            }
        }
    }

    if (band_factor_.size() * 2 * sizeof(double) <= (std::size_t{3} << 29)) {
        band_factor_t_.assign(band_factor_.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t jmax = std::min(n - 1, i + static_cast<std::size_t>(bandwidth_));
            for (std::size_t j = i; j <= jmax; ++j)
                band_factor_t_[i * w + (j - i)] = band_factor_[j * w + (i + bandwidth_ - j)];
        }
    }
}

void SolverHandle::prepare_iterative() {
    const int p = op_->lattice().points_per_axis();
    poisson_ = std::make_unique<FastPoissonData>();
    poisson_->pad = 0; // squared Dirichlet Laplacian on V_N itself
    const int m = p + 2 * poisson_->pad;
    poisson_->pts = m;
    const double divisor = m + 1;
    poisson_->sine.resize(static_cast<std::size_t>(m) * m);
    for (int k = 0; k < m; ++k)
        for (int x = 0; x < m; ++x)
            poisson_->sine[static_cast<std::size_t>(k) * m + x] =
                std::sin(std::numbers::pi * (k + 1) * (x + 1) / divisor);

    std::vector<double> cosines(m);
    for (int k = 0; k < m; ++k) cosines[k] = 2.0 * std::cos(std::numbers::pi * (k + 1) / divisor);

    const double norm = std::pow(2.0 / divisor, 4); // (S S)^{-1} over four axes, twice applied
    poisson_->inv_eigen.resize(static_cast<std::size_t>(m) * m * m * m);
    std::size_t idx = 0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c) {
                double partial = cosines[a] + cosines[b] + cosines[c] - 8.0;
                for (int d = 0; d < m; ++d) {
                    double mu = partial + cosines[d];
                    poisson_->inv_eigen[idx++] = norm / (mu * mu);
                }
            }
}

std::vector<double> SolverHandle::solve(std::span<const double> b, SolveInfo* info) const {
    const std::size_t n = op_->size();
    if (b.size() != n) throw std::invalid_argument("solve: rhs size mismatch");
    if (options_.mode == SolverMode::Iterative) return solve_pcg(b, info);

    std::vector<double> x(b.begin(), b.end());
    if (options_.mode == SolverMode::DirectDense) {
        const double* l = dense_factor_.data();
        for (std::size_t i = 0; i < n; ++i) { // L y = b
            const double* li = l + i * n;
            double s = x[i];
            for (std::size_t k = 0; k < i; ++k) s -= li[k] * x[k];
            x[i] = s / li[i];
        }
        for (std::size_t ii = n; ii-- > 0;) { // L^T x = y
            double s = x[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k];
            x[ii] = s / l[ii * n + ii];
        }
    } else {
        const std::ptrdiff_t bw = bandwidth_;
        const std::ptrdiff_t w = bw + 1;
        const double* band = band_factor_.data();
        const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
        for (std::ptrdiff_t i = 0; i < sn; ++i) {
            const double* ri = band + i * w;
            std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(0, i - bw);
            x[i] = (x[i] - dot4(ri + (k0 - i + bw), x.data() + k0, i - k0)) / ri[bw];
        }
        banded_back_solve(x);
    }
    if (info) *info = SolveInfo{};
    return x;
}

void SolverHandle::banded_back_solve(std::vector<double>& x) const {
    const std::ptrdiff_t bw = bandwidth_;
    const std::ptrdiff_t w = bw + 1;
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(x.size());
    if (!band_factor_t_.empty()) {
        const double* bt = band_factor_t_.data();
        for (std::ptrdiff_t i = sn; i-- > 0;) {
            std::ptrdiff_t kmax = std::min<std::ptrdiff_t>(sn - 1, i + bw);
            const double* ri = bt + i * w;
            x[i] = (x[i] - dot4(ri + 1, x.data() + i + 1, kmax - i)) / ri[0];
        }
        return;
    }
    const double* band = band_factor_.data();
    for (std::ptrdiff_t i = sn; i-- > 0;) {
        std::ptrdiff_t kmax = std::min<std::ptrdiff_t>(sn - 1, i + bw);
        double s = x[i];
        for (std::ptrdiff_t k = i + 1; k <= kmax; ++k) s -= band[k * w + (i - k + bw)] * x[k];
        x[i] = s / band[i * w + bw];
    }
}

std::vector<double> SolverHandle::solve_pcg(std::span<const double> b, SolveInfo* info) const {
    const std::size_t n = op_->size();
    const int p = op_->lattice().points_per_axis();

    double bnorm2 = 0.0;
    for (double v : b) bnorm2 += v * v;
    if (bnorm2 == 0.0) {
        if (info) *info = SolveInfo{};
        return std::vector<double>(n, 0.0);
    }
    const double target2 = options_.tolerance * options_.tolerance * bnorm2;

    std::vector<double> x(n, 0.0), r(b.begin(), b.end()), z(n), pdir(n), q(n);
    PrecisionOperator::Workspace ws = op_->make_workspace();
    std::vector<double> t0, t1, diag;
    if (options_.preconditioner == Preconditioner::FastPoisson) {
        const std::size_t m4 = poisson_->inv_eigen.size();
        t0.resize(m4);
        t1.resize(m4);
    } else {
        diag.assign(n, 1.0 / 72.0); // constant diagonal of the stencil
    }

    auto precondition = [&](const std::vector<double>& rin, std::vector<double>& zout) {
        if (options_.preconditioner == Preconditioner::FastPoisson) {
            poisson_->apply(rin.data(), zout.data(), p, t0, t1);
        } else {
            for (std::size_t i = 0; i < n; ++i) zout[i] = rin[i] * diag[i];
        }
    };

    precondition(r, z);
    pdir = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

    int iter = 0;
    double rnorm2 = bnorm2;
    for (; iter < options_.max_iterations; ++iter) {
        op_->matvec(pdir, q, ws);
        double pq = 0.0;
        for (std::size_t i = 0; i < n; ++i) pq += pdir[i] * q[i];
        double alpha = rz / pq;
        rnorm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * pdir[i];
            r[i] -= alpha * q[i];
            rnorm2 += r[i] * r[i];
        }
        if (rnorm2 <= target2) {
            ++iter;
            break;
        }
        precondition(r, z);
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) pdir[i] = z[i] + beta * pdir[i];
    }

    double rel = std::sqrt(rnorm2 / bnorm2);
    if (info) *info = SolveInfo{iter, rel};
    if (rel > options_.tolerance)
        throw SolverError("pcg: no convergence within iteration budget (relative residual " +
                              std::to_string(rel) + ")",
                          rel, iter);
    return x;
}

std::vector<double> SolverHandle::sample(RngStream& stream) const {
    const std::size_t n = op_->size();
    if (options_.mode != SolverMode::Iterative) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = stream.next_normal();
        // Solve L^T h = z: Cov(h) = L^{-T} L^{-1} = A^{-1}.
        if (options_.mode == SolverMode::DirectDense) {
            const double* l = dense_factor_.data();
            for (std::size_t ii = n; ii-- > 0;) {
                double s = x[ii];
                for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k];
                x[ii] = s / l[ii * n + ii];
            }
        } else {
            banded_back_solve(x);
        }
        for (double& v : x) v *= kFieldScale;
        return x;
    }

    // Iterative: white noise on V_N plus the distance-1 exterior shell,
    // b = L^T z restricted to the box, then A h = b; Cov(h) = A^{-1}.
    const int p = op_->lattice().points_per_axis();
    const int side = op_->lattice().n_side();
    const int m = p + 2; // coordinates [-1, N+1]
    const std::ptrdiff_t s2 = m, s1 = static_cast<std::ptrdiff_t>(m) * m,
                         s0 = static_cast<std::ptrdiff_t>(m) * m * m;
    std::vector<double> zext(static_cast<std::size_t>(m) * m * m * m, 0.0);
    for (int a = -1; a <= side + 1; ++a) {
        int oa = (a < 0 || a > side) ? 1 : 0;
        for (int b = -1; b <= side + 1; ++b) {
            int ob = oa + ((b < 0 || b > side) ? 1 : 0);
            if (ob > 1) continue;
            for (int c = -1; c <= side + 1; ++c) {
                int oc = ob + ((c < 0 || c > side) ? 1 : 0);
                if (oc > 1) continue;
                double* row = zext.data() + (a + 1) * s0 + (b + 1) * s1 + (c + 1) * s2 + 1;
                if (oc == 1) {
                    for (int d = 0; d <= side; ++d) row[d] = stream.next_normal();
                } else {
                    row[-1] = stream.next_normal();
                    for (int d = 0; d <= side; ++d) row[d] = stream.next_normal();
                    row[side + 1] = stream.next_normal();
                }
            }
        }
    }
    std::vector<double> b(n);
    std::size_t dst = 0;
    for (int a = 0; a < p; ++a)
        for (int bq = 0; bq < p; ++bq)
            for (int c = 0; c < p; ++c) {
                const double* e = zext.data() + (a + 1) * s0 + (bq + 1) * s1 + (c + 1) * s2 + 1;
                for (int d = 0; d < p; ++d)
                    b[dst++] = e[d - 1] + e[d + 1] + e[d - s2] + e[d + s2] + e[d - s1] +
                               e[d + s1] + e[d - s0] + e[d + s0] - 8.0 * e[d];
            }
    std::vector<double> h = solve_pcg(b, nullptr);
    for (double& v : h) v *= kFieldScale;
    return h;
}

std::vector<double> SolverHandle::green_column(const Vec4i& v) const {
    std::vector<double> e(op_->size(), 0.0);
    e[op_->lattice().index(v)] = 1.0;
    std::vector<double> col = solve(e);
    for (double& c : col) c *= kCovarianceScale;
    return col;
}

std::vector<double> SolverHandle::green_diagonal() const {
    const std::size_t n = op_->size();
    std::vector<double> diag(n);
    if (options_.mode == SolverMode::DirectDense) {
        // G(v,v) = || L^{-1} e_v ||^2 via one forward solve per column.
        const double* l = dense_factor_.data();
        std::vector<double> y(n);
        for (std::size_t v = 0; v < n; ++v) {
            double acc = 0.0;
            for (std::size_t i = v; i < n; ++i) {
                double s = (i == v) ? 1.0 : 0.0;
                const double* li = l + i * n;
                for (std::size_t k = v; k < i; ++k) s -= li[k] * y[k];
                y[i] = s / li[i];
                acc += y[i] * y[i];
            }
            diag[v] = kCovarianceScale * acc;
        }
        return diag;
    }
    if (options_.mode == SolverMode::DirectBanded) {
        const std::ptrdiff_t bw = bandwidth_;
        const std::ptrdiff_t w = bw + 1;
        const double* band = band_factor_.data();
        const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
        std::vector<double> y(n);
        for (std::ptrdiff_t v = 0; v < sn; ++v) {
            double acc = 0.0;
            std::ptrdiff_t imax = std::min(sn - 1, v + bw);
            for (std::ptrdiff_t i = v; i <= imax; ++i) {
                const double* ri = band + i * w;
                std::ptrdiff_t k0 = std::max(v, i - bw);
                double s = (i == v) ? 1.0 : 0.0;
                const double* pi = ri + (k0 - i + bw);
                for (std::ptrdiff_t k = k0; k < i; ++k) s -= pi[k - k0] * y[k];
                y[i] = s / ri[bw];
                acc += y[i] * y[i];
            }
            diag[v] = kCovarianceScale * acc;
        }
        return diag;
    }
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<double> col = green_column(op_->lattice().vertex(v));
        diag[v] = col[v];
    }
    return diag;
}

} // namespace mbr4
