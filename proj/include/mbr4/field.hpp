#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbr4/lattice.hpp"

namespace mbr4 {

enum class FieldKind : std::uint8_t {
    Membrane = 0,
    Brw = 1,
    Mbrw = 2,
    Interpolated = 3,
    Fine = 4,
    Smooth = 5,
};

std::string field_kind_name(FieldKind kind);
FieldKind parse_field_kind(const std::string& name);

/// One realization of a real-valued function on V_N, with its provenance
/// and the 64-bit stream identifier that produced it. Immutable by
/// convention once filled.
struct Field {
    Lattice4 lattice;
    std::vector<double> values; // lexicographic ordering, last coord fastest
    FieldKind kind = FieldKind::Membrane;
    std::uint64_t seed = 0;

    double at(const Vec4i& v) const { return values[lattice.index(v)]; }
    double max_value() const;
};

/// Binary field format: magic "MBR4", version u16, N u32, (N+1)^4 doubles
/// little-endian in the canonical ordering, the 64-bit seed, then a one-byte
/// provenance tag. All integers little-endian.
void write_field(const Field& field, const std::string& path);
Field read_field(const std::string& path);

} // namespace mbr4
