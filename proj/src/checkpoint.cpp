#include "deepsense/binary_io.hpp"
#include "deepsense/deepnet.hpp"
#include "deepsense/errors.hpp"

#include <cmath>
#include <map>

namespace deepsense::net {

namespace {

constexpr std::string_view kMagic = "DSNW";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kMaxRank = 8;

struct RawTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
    std::size_t offset = 0;
};

std::string dims_string(const std::vector<std::uint32_t>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
    return s + "]";
}

const RawTensor& require_tensor(const std::map<std::string, RawTensor>& tensors, Param p, std::size_t end_offset) {
    auto it = tensors.find(param_name(p));
    if (it == tensors.end()) throw FormatError(std::string("checkpoint is missing tensor ") + param_name(p), end_offset);
    return it->second;
}

std::uint32_t dim_at(const RawTensor& t, std::size_t i, Param p) {
    if (i >= t.dims.size())
        throw FormatError(std::string("tensor ") + param_name(p) + " has rank " + std::to_string(t.dims.size()), t.offset);
    return t.dims[i];
}

// Recovers layer widths from the tensor dims; N comes from the header.
NetworkSpec infer_spec(const std::map<std::string, RawTensor>& tensors, std::uint32_t n, std::size_t end_offset) {
    NetworkSpec spec;
    spec.n_samples = n;
    const auto& c1 = require_tensor(tensors, Param::conv1_weight, end_offset);
    const auto& c2 = require_tensor(tensors, Param::conv2_weight, end_offset);
    const auto& d1 = require_tensor(tensors, Param::dense1_weight, end_offset);
    const auto& d2 = require_tensor(tensors, Param::dense2_weight, end_offset);
    spec.conv1_kernels = dim_at(c1, 0, Param::conv1_weight);
    spec.kernel_width = dim_at(c1, 1, Param::conv1_weight);
    spec.padding = spec.kernel_width / 2;
    spec.conv2_kernels = dim_at(c2, 0, Param::conv2_weight);
    spec.dense1_units = dim_at(d1, 0, Param::dense1_weight);
    spec.dense2_units = dim_at(d2, 0, Param::dense2_weight);
    try {
        spec.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("checkpoint describes an invalid network: ") + e.what(), c1.offset);
    }
    return spec;
}

struct Parsed {
    std::uint32_t n = 0;
    std::map<std::string, RawTensor> tensors;
    std::size_t end_offset = 0;
};

Parsed parse(std::string_view bytes) {
    io::ByteReader r(bytes);
    if (r.bytes(4, "magic") != kMagic) throw FormatError("bad checkpoint magic", 0);
    const auto version = r.u32("version");
    if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    Parsed out;
    out.n = r.u32("N");
    const auto count = r.u32("tensor count");
    if (count > 64) throw FormatError("implausible tensor count " + std::to_string(count), 12);
    for (std::uint32_t i = 0; i < count; ++i) {
        RawTensor t;
        t.offset = r.offset();
        const auto len = r.u16("tensor name length");
        std::string name(r.bytes(len, "tensor name"));
        for (char c : name)
            if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) > 0x7e)
                throw FormatError("tensor name is not printable ASCII", t.offset);
        const auto rank = r.u8("tensor rank");
        if (rank == 0 || rank > kMaxRank) throw FormatError("tensor rank " + std::to_string(rank) + " out of range", t.offset);
        std::uint64_t elements = 1;
        for (std::uint8_t k = 0; k < rank; ++k) {
            const auto d = r.u32("tensor dim");
            t.dims.push_back(d);
            elements *= d;
            if (elements > (std::uint64_t{1} << 34)) throw FormatError("tensor " + name + " is implausibly large", t.offset);
        }
        r.require(elements, 4, "tensor payload");
        t.values.resize(static_cast<std::size_t>(elements));
        for (auto& v : t.values) v = r.f32("tensor payload");
        if (!out.tensors.emplace(name, std::move(t)).second) throw FormatError("duplicate tensor " + name, r.offset());
    }
    r.expect_end("checkpoint");
    out.end_offset = r.offset();
    return out;
}

NetworkWeights<float> assemble(const Parsed& parsed, const NetworkSpec& spec, bool shape_errors) {
    // Shapes are checked before anything is allocated: a corrupted header N
    // must not turn into a huge zero-filled tensor.
    NetworkWeights<float> shape;
    shape.spec = spec;
    const std::uint64_t flat = std::uint64_t{spec.conv2_kernels} * 2 * spec.n_samples;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto p = static_cast<Param>(i);
        const auto& t = require_tensor(parsed.tensors, p, parsed.end_offset);
        const auto expected = shape.dims(p);
        const bool wrapped = p == Param::dense1_weight && flat != expected[1];
        if (t.dims != expected || wrapped) {
            const std::string msg = std::string("tensor ") + param_name(p) + " has shape " + dims_string(t.dims) +
                                    ", network expects " + dims_string(expected);
            if (shape_errors) throw ShapeError(msg);
            throw FormatError(msg, t.offset);
        }
    }
    auto w = NetworkWeights<float>::zeros(spec);
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto p = static_cast<Param>(i);
        const auto& t = require_tensor(parsed.tensors, p, parsed.end_offset);
        auto& m = w[p];
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[k++];
    }
    if (parsed.tensors.size() != kParamCount) throw FormatError("checkpoint has unexpected extra tensors", parsed.end_offset);
    return w;
}

}  // namespace

std::string encode_weights(const NetworkWeights<float>& w) {
    io::ByteWriter out;
    out.bytes(kMagic);
    out.u32(kVersion);
    out.u32(static_cast<std::uint32_t>(w.spec.n_samples));
    out.u32(static_cast<std::uint32_t>(kParamCount));
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto p = static_cast<Param>(i);
        const std::string name = param_name(p);
        out.u16(static_cast<std::uint16_t>(name.size()));
        out.bytes(name);
        const auto dims = w.dims(p);
        out.u8(static_cast<std::uint8_t>(dims.size()));
        for (auto d : dims) out.u32(d);
        const auto& m = w[p];
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out.f32(m(r, c));
    }
    return out.release();
}

NetworkWeights<float> decode_weights(std::string_view bytes) {
    const auto parsed = parse(bytes);
    return assemble(parsed, infer_spec(parsed.tensors, parsed.n, parsed.end_offset), false);
}

NetworkWeights<float> decode_weights(std::string_view bytes, const NetworkSpec& expected) {
    const auto parsed = parse(bytes);
    if (parsed.n != expected.n_samples)
        throw ShapeError("checkpoint N = " + std::to_string(parsed.n) + ", network expects " +
                         std::to_string(expected.n_samples));
    return assemble(parsed, expected, true);
}

void save_weights(const NetworkWeights<float>& w, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_weights(w));
}

NetworkWeights<float> load_weights(const std::filesystem::path& path) { return decode_weights(io::read_file(path)); }

NetworkWeights<float> load_weights(const std::filesystem::path& path, const NetworkSpec& expected) {
    return decode_weights(io::read_file(path), expected);
}

}  // namespace deepsense::net
