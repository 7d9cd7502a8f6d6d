#include "deepsense/binary_io.hpp"
#include "deepsense/errors.hpp"
#include "deepsense/signal_sim.hpp"

#include <cmath>

namespace deepsense::sim {

namespace {

constexpr std::string_view kMagic = "DSDS";
constexpr std::uint32_t kVersion = 1;

DatasetHeader decode_header(io::ByteReader& r) {
    const auto magic = r.bytes(4, "magic");
    if (magic != kMagic) throw FormatError("bad dataset magic", 0);
    DatasetHeader h;
    h.version = r.u32("version");
    if (h.version != kVersion) throw FormatError("unsupported dataset version " + std::to_string(h.version), 4);
    h.n_samples = r.u32("sample count N");
    h.count = r.u64("example count");
    return h;
}

}  // namespace

std::string encode_dataset(const Dataset& d) {
    io::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(d.n_samples_per_example));
    w.u64(d.examples.size());
    for (const auto& ex : d.examples) {
        if (ex.iq.size() != 2 * d.n_samples_per_example)
            throw DimensionError("encode_dataset: example length does not match N");
        w.u8(ex.label);
        for (float v : ex.iq) w.f32(v);
    }
    return w.release();
}

Dataset decode_dataset(std::string_view bytes) {
    io::ByteReader r(bytes);
    const auto h = decode_header(r);
    if (h.n_samples < 2 && h.count > 0) throw FormatError("dataset N must be >= 2", 8);
    const std::uint64_t record = 1 + 8ull * h.n_samples;
    r.require(h.count, record, "example records");

    Dataset d;
    d.n_samples_per_example = h.n_samples;
    d.examples.resize(static_cast<std::size_t>(h.count));
    for (auto& ex : d.examples) {
        const std::size_t at = r.offset();
        ex.label = r.u8("label");
        if (ex.label > 1) throw FormatError("label must be 0 or 1", at);
        ex.iq.resize(2 * static_cast<std::size_t>(h.n_samples));
        for (auto& v : ex.iq) {
            const std::size_t vat = r.offset();
            v = r.f32("IQ sample");
            if (!std::isfinite(v)) throw FormatError("non-finite IQ sample", vat);
        }
    }
    r.expect_end("dataset payload");
    return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) { io::write_file_atomic(path, encode_dataset(d)); }

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

DatasetHeader read_dataset_header(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes);
    return decode_header(r);
}

}  // namespace deepsense::sim
