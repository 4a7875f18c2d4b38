#include "mbr4/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mbr4 {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
// monic Hermite recurrence (diagonal 0, off-diagonal sqrt(k/2)); weights
// are sqrt(pi) times the squared first eigenvector components. The
// tridiagonal QL sweep with implicit shifts only tracks the first row of
// the accumulated rotations.
GaussHermiteRule build_rule(int n) {
    if (n < 1 || n > 8192) throw std::invalid_argument("gauss_hermite: bad node count");
    std::vector<double> d(n, 0.0), e(n, 0.0), q0(n, 0.0);
    for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(0.5 * k);
    q0[0] = 1.0;

    auto hypot2 = [](double a, double b) { return std::hypot(a, b); };

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + dd * 1e-16) break;
            }
            if (m != l) {
                if (++iter > 60) throw std::runtime_error("gauss_hermite: QL did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = hypot2(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    double b = c * e[i];
                    r = hypot2(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    // Rotate the tracked first row of the eigenvector matrix.
                    double q = q0[i + 1];
                    q0[i + 1] = s * q0[i] + c * q;
                    q0[i] = c * q0[i] - s * q;
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mu0 = std::sqrt(std::numbers::pi);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = d[order[i]];
        rule.weights[i] = mu0 * q0[order[i]] * q0[order[i]];
    }
    return rule;
}

} // namespace

const GaussHermiteRule& gauss_hermite(int n) {
    static std::map<int, GaussHermiteRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
    return it->second;
}

} // namespace mbr4
