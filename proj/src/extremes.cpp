#include "mbr4/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mbr4/quadrature.hpp"
#include "mbr4/sampler.hpp"

namespace mbr4 {

namespace {

std::vector<Vec4i> l1_ball_offsets(int radius) {
    std::vector<Vec4i> offsets;
    for (int a = -radius; a <= radius; ++a)
        for (int b = -radius; b <= radius; ++b)
            for (int c = -radius; c <= radius; ++c)
                for (int d = -radius; d <= radius; ++d) {
                    if (std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d) > radius) continue;
                    if (a == 0 && b == 0 && c == 0 && d == 0) continue;
                    offsets.push_back({a, b, c, d});
                }
    return offsets;
}

} // namespace

PointProcessSample extract_extremal_process(const Field& h, int radius) {
    if (radius < 1) throw std::invalid_argument("extract_extremal_process: need r >= 1");
    const Lattice4& lat = h.lattice;
    const int side = lat.n_side();
    const int p = lat.points_per_axis();
    const double m_n = centering(side);
    const double inv_n = 1.0 / side;
    const std::ptrdiff_t s2 = p, s1 = static_cast<std::ptrdiff_t>(p) * p,
                         s0 = static_cast<std::ptrdiff_t>(p) * p * p;

    PointProcessSample pp;
    pp.n_side = side;
    pp.radius = radius;

    const std::vector<Vec4i> offsets = l1_ball_offsets(radius);
    const double* v = h.values.data();

    std::size_t idx = 0;
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b)
            for (int c = 0; c < p; ++c)
                for (int d = 0; d < p; ++d, ++idx) {
                    const double hv = v[idx];
                    // Cheap prefilter against the axis neighbors.
                    if (a > 0 && v[idx - s0] > hv) continue;
                    if (a + 1 < p && v[idx + s0] > hv) continue;
                    if (b > 0 && v[idx - s1] > hv) continue;
                    if (b + 1 < p && v[idx + s1] > hv) continue;
                    if (c > 0 && v[idx - s2] > hv) continue;
                    if (c + 1 < p && v[idx + s2] > hv) continue;
                    if (d > 0 && v[idx - 1] > hv) continue;
                    if (d + 1 < p && v[idx + 1] > hv) continue;

                    bool is_max = true;
                    for (const Vec4i& off : offsets) {
                        int za = a + off[0], zb = b + off[1], zc = c + off[2], zd = d + off[3];
                        if (za < 0 || za > side || zb < 0 || zb > side || zc < 0 || zc > side ||
                            zd < 0 || zd > side)
                            continue;
                        if (v[za * s0 + zb * s1 + zc * s2 + zd] > hv) {
                            is_max = false;
                            break;
                        }
                    }
                    if (!is_max) continue;
                    pp.atoms.push_back({{a, b, c, d},
                                        {a * inv_n, b * inv_n, c * inv_n, d * inv_n},
                                        hv - m_n});
                }
    return pp;
}

std::string point_process_csv(const PointProcessSample& pp) {
    std::string out = "x1,x2,x3,x4,height\n";
    char line[256];
    for (const auto& atom : pp.atoms) {
        std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.12g,%.12g\n", atom.position[0],
                      atom.position[1], atom.position[2], atom.position[3], atom.height);
        out += line;
    }
    return out;
}

std::vector<std::size_t> level_set(const Field& h, double lambda) {
    const double threshold = centering(h.lattice.n_side()) - lambda;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < h.values.size(); ++i)
        if (h.values[i] >= threshold) out.push_back(i);
    return out;
}

namespace {

// Canonical ordering of a vertex pair for tie-breaking.
std::pair<Vec4i, Vec4i> ordered_pair(const Vec4i& a, const Vec4i& b) {
    return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

bool pair_less(const std::pair<Vec4i, Vec4i>& a, const std::pair<Vec4i, Vec4i>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
}

double distance_for(const Vec4i& a, const Vec4i& b, Norm norm) {
    if (norm == Norm::LInf) return norm_linf(a, b);
    if (norm == Norm::L1) return norm_l1(a, b);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

PairStatistic pair_max(const Field& h, int radius, Norm norm) {
    if (radius < 1) throw std::invalid_argument("pair_max: need r >= 1");
    const int side = h.lattice.n_side();
    PairStatistic stat;
    stat.radius = radius;
    stat.upper_bound = static_cast<double>(side) / radius;
    if (static_cast<double>(radius) > stat.upper_bound) return stat; // vacuous window

    const std::size_t n = h.values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (h.values[a] != h.values[b]) return h.values[a] > h.values[b];
        return a < b;
    });

    double best = -std::numeric_limits<double>::infinity();
    std::pair<Vec4i, Vec4i> best_pair;
    bool found = false;
    for (std::size_t i = 0; i < n; ++i) {
        double hi = h.values[order[i]];
        if (found && 2.0 * hi < best) break;
        Vec4i u = h.lattice.vertex(order[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = hi + h.values[order[j]];
            if (found && s < best) break;
            Vec4i v = h.lattice.vertex(order[j]);
            double dist = distance_for(u, v, norm);
            if (dist < radius || dist > stat.upper_bound) continue;
            auto cand = ordered_pair(u, v);
            if (!found || s > best || (s == best && pair_less(cand, best_pair))) {
                best = s;
                best_pair = cand;
                found = true;
            }
        }
    }
    if (found) {
        stat.empty = false;
        stat.value = best;
        stat.first = best_pair.first;
        stat.second = best_pair.second;
    }
    return stat;
}

double top_sum(const Field& h, std::size_t count) {
    if (count < 1 || count > h.values.size())
        throw std::invalid_argument("top_sum: count out of range");
    std::vector<double> vals = h.values;
    std::nth_element(vals.begin(), vals.begin() + (count - 1), vals.end(),
                     std::greater<double>());
    std::sort(vals.begin(), vals.begin() + count, std::greater<double>());
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += vals[i];
    return s;
}

double derivative_martingale(const Field& h) {
    const int side = h.lattice.n_side();
    if (side < 2) throw std::invalid_argument("derivative_martingale: need N >= 2");
    const double eight_ln_n = 8.0 * std::log(static_cast<double>(side));
    const double inv_sqrt8 = 1.0 / std::sqrt(8.0);
    double total = 0.0;
    for (double hv : h.values) {
        const double exponent = std::numbers::pi * hv - eight_ln_n;
        const double weight = (eight_ln_n - std::numbers::pi * hv) * inv_sqrt8;
        if (exponent > 700.0) {
            // Log-space guard; only reachable for artificial inputs.
            double sign = weight >= 0.0 ? 1.0 : -1.0;
            total += sign * std::exp(exponent + std::log(std::abs(weight)));
        } else {
            total += weight * std::exp(exponent);
        }
    }
    return total;
}

TestFunction standard_bump(double amplitude, double height_center, double height_halfwidth) {
    if (amplitude < 0.0) throw std::invalid_argument("standard_bump: amplitude must be >= 0");
    if (height_halfwidth <= 0.0) throw std::invalid_argument("standard_bump: bad halfwidth");
    TestFunction f;
    f.height_lo = height_center - height_halfwidth;
    f.height_hi = height_center + height_halfwidth;
    f.compact_support = true;
    f.smooth = true;
    f.eval = [amplitude, height_center, height_halfwidth](const std::array<double, 4>&,
                                                          double h) {
        double s = (h - height_center) / height_halfwidth;
        double s2 = s * s;
        if (s2 >= 1.0) return 0.0;
        return amplitude * std::exp(1.0 - 1.0 / (1.0 - s2));
    };
    return f;
}

TestFunction dyson_transform(const TestFunction& f, double t, int initial_nodes) {
    if (t <= 0.0) throw std::invalid_argument("dyson_transform: need t > 0");
    if (initial_nodes < 3) throw std::invalid_argument("dyson_transform: too few nodes");

    const double shift = -0.5 * std::numbers::pi * t; // drift of h + W_t - pi t / 2
    const double scale = std::sqrt(2.0 * t);          // Hermite variable -> W_t
    constexpr int kMaxNodes = 4096;

    auto evaluate = [f, shift, scale](int nodes, const std::array<double, 4>& x, double h) {
        const GaussHermiteRule& rule = gauss_hermite(nodes);
        double wsum = 0.0, acc = 0.0;
        for (int i = 0; i < nodes; ++i) {
            double g = f(x, h + shift + scale * rule.nodes[i]);
            acc += rule.weights[i] * std::exp(-g);
            wsum += rule.weights[i];
        }
        // Normalizing by the computed weight mass makes constants exact and
        // keeps the result non-negative for non-negative f.
        return -std::log(acc / wsum);
    };

    TestFunction out;
    out.height_lo = f.height_lo;
    out.height_hi = f.height_hi;
    out.compact_support = false;
    out.smooth = true;
    // Per-call doubling ladder: accept once two successive node counts
    // agree to 1e-6. The ladder is a pure function of (x, h), so results
    // do not depend on evaluation order.
    out.eval = [evaluate, initial_nodes](const std::array<double, 4>& x, double h) {
        double coarse = evaluate(initial_nodes, x, h);
        for (int nodes = 2 * initial_nodes; nodes <= 2 * kMaxNodes; nodes *= 2) {
            double fine = evaluate(nodes, x, h);
            if (std::abs(fine - coarse) <= 1e-6) return fine;
            coarse = fine;
        }
        throw std::runtime_error("dyson_transform: quadrature did not stabilize to 1e-6");
    };
    return out;
}

LaplaceValue laplace_functional(const PointProcessSample& pp, const TestFunction& f) {
    double inner = 0.0;
    for (const auto& atom : pp.atoms) inner += f(atom.position, atom.height);
    return {inner, std::exp(-inner)};
}

bool has_near_maxima_pair(const Field& h, int radius, double c, Norm norm) {
    if (radius < 3) throw std::invalid_argument("has_near_maxima_pair: need r >= 3");
    const int side = h.lattice.n_side();
    const double upper = static_cast<double>(side) / radius;
    if (static_cast<double>(radius) > upper) return false;
    const double lambda = c * std::log(std::log(static_cast<double>(radius)));
    std::vector<std::size_t> high = level_set(h, lambda);
    for (std::size_t i = 0; i < high.size(); ++i) {
        Vec4i u = h.lattice.vertex(high[i]);
        for (std::size_t j = i + 1; j < high.size(); ++j) {
            Vec4i v = h.lattice.vertex(high[j]);
            double dist = distance_for(u, v, norm);
            if (dist >= radius && dist <= upper) return true;
        }
    }
    return false;
}

} // namespace mbr4
