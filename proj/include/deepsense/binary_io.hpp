#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace deepsense::io {

/// Little-endian byte sink.
class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    const std::string& data() const noexcept { return buf_; }
    std::string release() { return std::move(buf_); }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    std::string buf_;
};

/// Little-endian byte source over an in-memory buffer. Every read checks the
/// remaining length and throws FormatError carrying the offending offset.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::string_view bytes(std::size_t n, const char* what);
    std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(get_le(1, what)); }
    std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(get_le(2, what)); }
    std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get_le(4, what)); }
    std::uint64_t u64(const char* what) { return get_le(8, what); }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    /// Throws unless `count * unit` more bytes are available.
    void require(std::uint64_t count, std::uint64_t unit, const char* what) const;
    /// Throws if unread bytes remain.
    void expect_end(const char* what) const;

private:
    std::uint64_t get_le(int n, const char* what);
    std::string_view data_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// 64-bit FNV-1a, used for config hashes and payload checksums.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t v);

/// Shortest decimal form that parses back to exactly `v`.
std::string format_real(double v);

}  // namespace deepsense::io
