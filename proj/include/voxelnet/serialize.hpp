#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "voxelnet/error.hpp"

namespace voxelnet {

// Little-endian binary writer. All toolkit file formats are explicit
// byte-for-byte little-endian regardless of host order.
class ByteWriter {
public:
    explicit ByteWriter(const std::filesystem::path& path);
    ~ByteWriter();

    void magic(const char tag[4]);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f64(double v);
    void f32_array(std::span<const double> v);  // stored single precision
    void f64_array(std::span<const double> v);

    // Flushes and reports failure; the destructor closes without throwing.
    void finish();

private:
    void put(const unsigned char* bytes, std::size_t n);

    std::ofstream out_;
    std::string path_;
};

// Little-endian binary reader that tracks the byte offset for diagnostics.
// Truncation or a bad magic raises FormatError naming the offset.
class ByteReader {
public:
    explicit ByteReader(const std::filesystem::path& path);

    void expect_magic(const char tag[4]);
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::vector<double> f32_array(std::size_t n);  // widened to double
    std::vector<double> f64_array(std::size_t n);

    std::size_t offset() const { return offset_; }
    // Raises FormatError if unread bytes remain.
    void expect_eof();

private:
    void get(unsigned char* bytes, std::size_t n);

    std::ifstream in_;
    std::string path_;
    std::size_t offset_ = 0;
};

}  // namespace voxelnet
