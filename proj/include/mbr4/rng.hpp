#pragma once

#include <cstdint>

namespace mbr4 {

namespace detail {

struct ZigguratTables {
    std::uint32_t kn[128];
    double wn[128];
    double fn[128];
};

const ZigguratTables& ziggurat_tables();

} // namespace detail

/// Counter-based random stream (Philox 4x32-10, Salmon et al. 2011).
///
/// A stream is a pure function of (seed, stream_id): replicates and
/// sub-samplers get disjoint stream ids and can run in any order or thread
/// with bit-identical results. State is four counter words; the key is the
/// 64-bit master seed.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : zig_(&detail::ziggurat_tables()) {
        key_[0] = static_cast<std::uint32_t>(seed);
        key_[1] = static_cast<std::uint32_t>(seed >> 32);
        stream_[0] = static_cast<std::uint32_t>(stream_id);
        stream_[1] = static_cast<std::uint32_t>(stream_id >> 32);
    }

    std::uint32_t next_u32() {
        if (pos_ >= 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        std::uint64_t lo = next_u32();
        std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform on (0,1), never exactly 0 or 1.
    double next_double() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via a 128-layer ziggurat (Marsaglia & Tsang 2000).
    double next_normal() {
        const detail::ZigguratTables& z = *zig_;
        std::int32_t hz = static_cast<std::int32_t>(next_u32());
        int iz = hz & 127;
        std::uint32_t mag = hz < 0 ? ~static_cast<std::uint32_t>(hz) + 1u
                                   : static_cast<std::uint32_t>(hz);
        if (mag < z.kn[iz]) return hz * z.wn[iz];
        return normal_tail(hz, iz);
    }

private:
    void refill();
    double normal_tail(std::int32_t hz, int iz);

    const detail::ZigguratTables* zig_;
    std::uint32_t key_[2];
    std::uint32_t stream_[2];
    std::uint64_t block_ = 0;
    std::uint32_t buf_[4];
    int pos_ = 4;
};

/// Derives the stream id for (replicate, substream) pairs so samplers inside
/// one replicate never share state. substream < 256.
inline std::uint64_t replicate_stream(std::uint64_t replicate, std::uint32_t substream) {
    return (replicate << 8) | (substream & 0xffu);
}

} // namespace mbr4
