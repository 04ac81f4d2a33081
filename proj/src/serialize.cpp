#include "voxelnet/serialize.hpp"

#include <cstring>

namespace voxelnet {

namespace {

void encode_le(std::uint64_t v, unsigned char* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t decode_le(const unsigned char* in, std::size_t n) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

}  // namespace

ByteWriter::ByteWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
    if (!out_) throw FormatError("cannot open for writing: " + path_);
}

ByteWriter::~ByteWriter() = default;

void ByteWriter::put(const unsigned char* bytes, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(n));
}

void ByteWriter::magic(const char tag[4]) {
    put(reinterpret_cast<const unsigned char*>(tag), 4);
}

void ByteWriter::u32(std::uint32_t v) {
    unsigned char buf[4];
    encode_le(v, buf, 4);
    put(buf, 4);
}

void ByteWriter::u64(std::uint64_t v) {
    unsigned char buf[8];
    encode_le(v, buf, 8);
    put(buf, 8);
}

void ByteWriter::f32(float v) {
    unsigned char buf[4];
    encode_le(std::bit_cast<std::uint32_t>(v), buf, 4);
    put(buf, 4);
}

void ByteWriter::f64(double v) {
    unsigned char buf[8];
    encode_le(std::bit_cast<std::uint64_t>(v), buf, 8);
    put(buf, 8);
}

void ByteWriter::f32_array(std::span<const double> v) {
    std::vector<unsigned char> buf(v.size() * 4);
    for (std::size_t i = 0; i < v.size(); ++i)
        encode_le(std::bit_cast<std::uint32_t>(static_cast<float>(v[i])), buf.data() + 4 * i, 4);
    put(buf.data(), buf.size());
}

void ByteWriter::f64_array(std::span<const double> v) {
    std::vector<unsigned char> buf(v.size() * 8);
    for (std::size_t i = 0; i < v.size(); ++i)
        encode_le(std::bit_cast<std::uint64_t>(v[i]), buf.data() + 8 * i, 8);
    put(buf.data(), buf.size());
}

void ByteWriter::finish() {
    out_.flush();
    if (!out_) throw FormatError("write failed: " + path_);
    out_.close();
}

ByteReader::ByteReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) throw FormatError("cannot open for reading: " + path_);
}

void ByteReader::get(unsigned char* bytes, std::size_t n) {
    in_.read(reinterpret_cast<char*>(bytes), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
        throw FormatError(path_ + ": truncated at byte offset " + std::to_string(offset_));
    offset_ += n;
}

void ByteReader::expect_magic(const char tag[4]) {
    unsigned char buf[4];
    const std::size_t at = offset_;
    get(buf, 4);
    if (std::memcmp(buf, tag, 4) != 0)
        throw FormatError(path_ + ": bad magic at byte offset " + std::to_string(at) +
                          ", expected " + std::string(tag, 4));
}

std::uint32_t ByteReader::u32() {
    unsigned char buf[4];
    get(buf, 4);
    return static_cast<std::uint32_t>(decode_le(buf, 4));
}

std::uint64_t ByteReader::u64() {
    unsigned char buf[8];
    get(buf, 8);
    return decode_le(buf, 8);
}

float ByteReader::f32() {
    unsigned char buf[4];
    get(buf, 4);
    return std::bit_cast<float>(static_cast<std::uint32_t>(decode_le(buf, 4)));
}

double ByteReader::f64() {
    unsigned char buf[8];
    get(buf, 8);
    return std::bit_cast<double>(decode_le(buf, 8));
}

std::vector<double> ByteReader::f32_array(std::size_t n) {
    std::vector<unsigned char> buf(n * 4);
    get(buf.data(), buf.size());
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::bit_cast<float>(static_cast<std::uint32_t>(decode_le(buf.data() + 4 * i, 4)));
    return out;
}

std::vector<double> ByteReader::f64_array(std::size_t n) {
    std::vector<unsigned char> buf(n * 8);
    get(buf.data(), buf.size());
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::bit_cast<double>(decode_le(buf.data() + 8 * i, 8));
    return out;
}

void ByteReader::expect_eof() {
    char c;
    if (in_.read(&c, 1))
        throw FormatError(path_ + ": trailing bytes at offset " + std::to_string(offset_));
}

}  // namespace voxelnet
