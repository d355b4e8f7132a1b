#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace mdphom {

/// Little-endian binary writer for the on-disk container formats.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path);
    void magic(const char tag[4]);
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_array(const double* data, std::size_t count);
    void bytes(const std::string& s);  // length-prefixed (u64)
    void close();

private:
    std::ofstream out_;
    std::string path_;
};

/// Little-endian binary reader that tracks the byte offset so corruption can
/// be reported precisely.
class BinaryReader {
public:
    explicit BinaryReader(const std::string& path);
    void expect_magic(const char tag[4], const std::string& what);
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void f64_array(double* data, std::size_t count);
    std::string bytes();  // length-prefixed (u64)
    std::size_t offset() const { return offset_; }
    bool at_eof();

private:
    void fill(void* dst, std::size_t count);

    std::ifstream in_;
    std::size_t offset_ = 0;
};

/// Writes a whole file, then atomically moves it into place.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace mdphom
