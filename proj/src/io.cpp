#include "mdphom/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "mdphom/errors.hpp"

namespace mdphom {

BinaryWriter::BinaryWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
}

void BinaryWriter::magic(const char tag[4]) {
    out_.write(tag, 4);
}

void BinaryWriter::u16(std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out_.write(reinterpret_cast<char*>(b), 2);
}

void BinaryWriter::u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<char*>(b), 4);
}

void BinaryWriter::u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<char*>(b), 8);
}

void BinaryWriter::f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
}

void BinaryWriter::f64_array(const double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
    } else {
        for (std::size_t i = 0; i < count; ++i) f64(data[i]);
    }
}

void BinaryWriter::bytes(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::close() {
    out_.flush();
    if (!out_) throw ConfigError("write failed for '" + path_ + "'");
    out_.close();
}

BinaryReader::BinaryReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw ConfigError("cannot open '" + path + "' for reading");
}

void BinaryReader::fill(void* dst, std::size_t count) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in_.gcount()) != count) {
        throw FormatError("unexpected end of file", offset_ + static_cast<std::size_t>(in_.gcount()));
    }
    offset_ += count;
}

void BinaryReader::expect_magic(const char tag[4], const std::string& what) {
    char buf[4];
    fill(buf, 4);
    if (std::memcmp(buf, tag, 4) != 0) {
        throw FormatError("not a " + what + " file (bad magic)", offset_ - 4);
    }
}

std::uint16_t BinaryReader::u16() {
    unsigned char b[2];
    fill(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t BinaryReader::u32() {
    unsigned char b[4];
    fill(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t BinaryReader::u64() {
    unsigned char b[8];
    fill(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

double BinaryReader::f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void BinaryReader::f64_array(double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        fill(data, count * 8);
    } else {
        for (std::size_t i = 0; i < count; ++i) data[i] = f64();
    }
}

std::string BinaryReader::bytes() {
    const std::uint64_t len = u64();
    std::string s(len, '\0');
    if (len) fill(s.data(), len);
    return s;
}

bool BinaryReader::at_eof() {
    return in_.peek() == std::ifstream::traits_type::eof();
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot open '" + path + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ConfigError("write failed for '" + path + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mdphom
