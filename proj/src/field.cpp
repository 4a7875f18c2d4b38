#include "mbr4/field.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mbr4 {

static_assert(std::endian::native == std::endian::little,
              "field I/O assumes a little-endian host");

std::string field_kind_name(FieldKind kind) {
    switch (kind) {
        case FieldKind::Membrane: return "membrane";
        case FieldKind::Brw: return "brw";
        case FieldKind::Mbrw: return "mbrw";
        case FieldKind::Interpolated: return "interpolated";
        case FieldKind::Fine: return "fine";
        case FieldKind::Smooth: return "smooth";
    }
    return "?";
}

FieldKind parse_field_kind(const std::string& name) {
    for (int k = 0; k <= 5; ++k)
        if (field_kind_name(static_cast<FieldKind>(k)) == name)
            return static_cast<FieldKind>(k);
    throw std::invalid_argument("unknown field kind: " + name);
}

double Field::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

namespace {
constexpr char kMagic[4] = {'M', 'B', 'R', '4'};
constexpr std::uint16_t kVersion = 1;
} // namespace

void write_field(const Field& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kMagic, 4);
    std::uint16_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    std::uint32_t n = static_cast<std::uint32_t>(field.lattice.n_side());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(&field.seed), sizeof field.seed);
    std::uint8_t tag = static_cast<std::uint8_t>(field.kind);
    out.write(reinterpret_cast<const char*>(&tag), sizeof tag);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Field read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("bad field magic in " + path);
    std::uint16_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != kVersion) throw std::runtime_error("unsupported field version in " + path);
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || n < 1 || n > 4096) throw std::runtime_error("bad field header in " + path);
    Field field{Lattice4(static_cast<int>(n)), {}, FieldKind::Membrane, 0};
    field.values.resize(field.lattice.vertex_count());
    in.read(reinterpret_cast<char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(&field.seed), sizeof field.seed);
    std::uint8_t tag = 0;
    if (in.read(reinterpret_cast<char*>(&tag), sizeof tag) && tag <= 5)
        field.kind = static_cast<FieldKind>(tag);
    if (in.bad()) throw std::runtime_error("read failed: " + path);
    return field;
}

} // namespace mbr4
