#include "mbr4/rng.hpp"

#include <cmath>

namespace mbr4 {

namespace {

constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline void philox_round(std::uint32_t c[4], const std::uint32_t k[2]) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kPhiloxM0, c[0], hi0, lo0);
    mul_hi_lo(kPhiloxM1, c[2], hi1, lo1);
    std::uint32_t r0 = hi1 ^ c[1] ^ k[0];
    std::uint32_t r1 = lo1;
    std::uint32_t r2 = hi0 ^ c[3] ^ k[1];
    std::uint32_t r3 = lo0;
    c[0] = r0;
    c[1] = r1;
    c[2] = r2;
    c[3] = r3;
}

constexpr double kZigguratR = 3.442619855899;

detail::ZigguratTables build_tables() {
    detail::ZigguratTables z;
    const double m = 2147483648.0; // 2^31
    double dn = kZigguratR, tn = dn;
    const double vn = 9.91256303526217e-3;
    double q = vn / std::exp(-0.5 * dn * dn);
    z.kn[0] = static_cast<std::uint32_t>((dn / q) * m);
    z.kn[1] = 0;
    z.wn[0] = q / m;
    z.wn[127] = dn / m;
    z.fn[0] = 1.0;
    z.fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
        dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
        z.kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m);
        tn = dn;
        z.fn[i] = std::exp(-0.5 * dn * dn);
        z.wn[i] = dn / m;
    }
    return z;
}

} // namespace

namespace detail {
const ZigguratTables& ziggurat_tables() {
    static const ZigguratTables tables = build_tables();
    return tables;
}
} // namespace detail

void RngStream::refill() {
    std::uint32_t c[4] = {static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32), stream_[0], stream_[1]};
    std::uint32_t k[2] = {key_[0], key_[1]};
    for (int round = 0; round < 10; ++round) {
        philox_round(c, k);
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    buf_[0] = c[0];
    buf_[1] = c[1];
    buf_[2] = c[2];
    buf_[3] = c[3];
    ++block_;
    pos_ = 0;
}

double RngStream::normal_tail(std::int32_t hz, int iz) {
    const detail::ZigguratTables& z = detail::ziggurat_tables();
    for (;;) {
        if (iz == 0) {
            double x, y;
            do {
                x = -std::log(next_double()) * (1.0 / kZigguratR);
                y = -std::log(next_double());
            } while (y + y < x * x);
            return hz > 0 ? kZigguratR + x : -(kZigguratR + x);
        }
        double x = hz * z.wn[iz];
        if (z.fn[iz] + next_double() * (z.fn[iz - 1] - z.fn[iz]) < std::exp(-0.5 * x * x))
            return x;
        hz = static_cast<std::int32_t>(next_u32());
        iz = hz & 127;
        std::uint32_t mag = hz < 0 ? ~static_cast<std::uint32_t>(hz) + 1u
                                   : static_cast<std::uint32_t>(hz);
        if (mag < z.kn[iz]) return hz * z.wn[iz];
    }
}

} // namespace mbr4
