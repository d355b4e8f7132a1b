#include "mdphom/idx.hpp"

#include <cstdint>
#include <fstream>

#include "mdphom/errors.hpp"

namespace mdphom {

namespace {

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
    if (offset + 4 > bytes.size()) {
        throw FormatError("idx: truncated header", bytes.size());
    }
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

IdxImages idx_parse(const std::vector<unsigned char>& bytes) {
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != 0x00000803u) {
        throw FormatError("idx: expected image magic 0x00000803, got 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%08x", magic);
            return std::string(buf);
        }(), 0);
    }
    IdxImages out;
    out.count = read_be32(bytes, 4);
    out.rows = read_be32(bytes, 8);
    out.cols = read_be32(bytes, 12);
    const std::size_t expected = 16 + out.count * out.rows * out.cols;
    if (bytes.size() < expected) {
        throw FormatError("idx: truncated image data, expected " + std::to_string(expected) +
                              " bytes",
                          bytes.size());
    }
    out.pixels.resize(out.count * out.rows * out.cols);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    }
    return out;
}

IdxImages idx_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("idx: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return idx_parse(bytes);
}

}  // namespace mdphom
