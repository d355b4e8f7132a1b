#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mdphom {

/// Images decoded from a standard IDX file (big-endian magic 0x00000803,
/// count, rows, cols, then one unsigned byte per pixel). Pixel bytes are
/// scaled into [0, 1].
struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;  // count * rows * cols, row-major per image

    const double* image(std::size_t i) const { return pixels.data() + i * rows * cols; }
};

/// Throws FormatError (with the failing byte offset) on a wrong magic number
/// or a truncated file.
IdxImages idx_load(const std::string& path);

/// Parses an in-memory IDX byte stream; idx_load is a thin file wrapper.
IdxImages idx_parse(const std::vector<unsigned char>& bytes);

}  // namespace mdphom
