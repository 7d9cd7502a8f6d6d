#include "deepsense/binary_io.hpp"

#include "deepsense/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepsense::io {

std::string_view ByteReader::bytes(std::size_t n, const char* what) {
    require(n, 1, what);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::uint64_t ByteReader::get_le(int n, const char* what) {
    require(static_cast<std::uint64_t>(n), 1, what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
}

void ByteReader::require(std::uint64_t count, std::uint64_t unit, const char* what) const {
    const std::uint64_t left = remaining();
    if (unit != 0 && count > left / unit)
        throw FormatError(std::string("truncated file while reading ") + what, pos_);
}

void ByteReader::expect_end(const char* what) const {
    if (remaining() != 0) throw FormatError(std::string("trailing bytes after ") + what, pos_);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace deepsense::io
