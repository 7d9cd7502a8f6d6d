#include "deepsense/binary_io.hpp"
#include "deepsense/deepnet.hpp"
#include "deepsense/errors.hpp"
#include "deepsense/signal_sim.hpp"
#include "deepsense/transfer.hpp"
#include "fuzz.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace deepsense;

namespace {

std::string sample_dataset() {
    sim::ScenarioConfig c;
    c.n_samples = 8;
    return sim::encode_dataset(sim::build_dataset(c, 6));
}

std::string sample_weights() { return net::encode_weights(net::initialize<float>(net::NetworkSpec::shrunken(8), 3)); }

std::string sample_tca() {
    sim::ScenarioConfig c;
    c.n_samples = 4;
    const auto src = sim::build_dataset(c, 12);
    c.seed = 2;
    c.signal_kind = sim::SignalKind::qpsk;
    const auto tar = sim::build_dataset(c, 12);
    transfer::TcaOptions opts;
    opts.m = 2;
    auto model = transfer::tca_fit(transfer::to_columns(src), transfer::to_columns(tar), opts);
    transfer::train_latent_classifier(model, src);
    return transfer::encode_tca(model);
}

}  // namespace

TEST(ByteIo, LittleEndianAndBounds) {
    io::ByteWriter w;
    w.u32(0x01020304u);
    w.f64(-2.5);
    EXPECT_EQ(w.data().substr(0, 4), std::string("\x04\x03\x02\x01", 4));
    io::ByteReader r(w.data());
    EXPECT_EQ(r.u32("a"), 0x01020304u);
    EXPECT_EQ(r.f64("b"), -2.5);
    try {
        r.u8("past end");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 12u);
    }
}

TEST(ByteIo, FormatRealRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -123456.789, 0.052631578947368425})
        EXPECT_EQ(std::stod(io::format_real(v)), v);
    EXPECT_EQ(io::format_real(0.5), "0.5");
    EXPECT_EQ(io::format_real(1000.0), "1000");
}

TEST(ByteIo, AtomicWriteReplaces) {
    const auto p = std::filesystem::temp_directory_path() / "deepsense_atomic.txt";
    io::write_file_atomic(p, "first");
    io::write_file_atomic(p, "second");
    EXPECT_EQ(io::read_file(p), "second");
    std::filesystem::remove(p);
    EXPECT_THROW(io::read_file(p), Error);
}

TEST(Dataset, RoundTripIsBitwise) {
    sim::ScenarioConfig c;
    c.signal_kind = sim::SignalKind::qam16;
    c.fading = sim::RayleighFading{};
    const auto d = sim::build_dataset(c, 50);
    const auto bytes = sim::encode_dataset(d);
    EXPECT_EQ(bytes.size(), 20u + 50u * (1u + 64u * 4u));
    const auto back = sim::decode_dataset(bytes);
    EXPECT_EQ(sim::encode_dataset(back), bytes);
    ASSERT_EQ(back.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(back.examples[i].label, d.examples[i].label);
        EXPECT_EQ(0, std::memcmp(back.examples[i].iq.data(), d.examples[i].iq.data(), d.examples[i].iq.size() * 4));
    }
    const auto p = std::filesystem::temp_directory_path() / "deepsense_rt.dsds";
    sim::save_dataset(d, p);
    EXPECT_EQ(io::read_file(p), bytes);
    const auto h = sim::read_dataset_header(p);
    EXPECT_EQ(h.version, 1u);
    EXPECT_EQ(h.n_samples, 32u);
    EXPECT_EQ(h.count, 50u);
    std::filesystem::remove(p);
}

TEST(Dataset, EmptyIsValid) {
    sim::Dataset d;
    d.n_samples_per_example = 16;
    const auto bytes = sim::encode_dataset(d);
    EXPECT_EQ(bytes.size(), 20u);
    const auto back = sim::decode_dataset(bytes);
    EXPECT_EQ(back.size(), 0u);
    EXPECT_EQ(back.n_samples_per_example, 16u);
}

TEST(Dataset, CorruptionsAreFormatErrors) {
    const auto bytes = sample_dataset();
    EXPECT_THROW(sim::decode_dataset(bytes.substr(0, bytes.size() - 3)), FormatError);
    EXPECT_THROW(sim::decode_dataset("DSDX" + bytes.substr(4)), FormatError);
    EXPECT_THROW(sim::decode_dataset(bytes + "\x01"), FormatError);
    auto bad_label = bytes;
    bad_label[20] = 7;
    EXPECT_THROW(sim::decode_dataset(bad_label), FormatError);
    auto huge = bytes;
    for (int k = 12; k < 20; ++k) huge[k] = '\xff';
    EXPECT_THROW(sim::decode_dataset(huge), FormatError);
}

TEST(Weights, CorruptionsAreFormatErrors) {
    const auto bytes = sample_weights();
    EXPECT_THROW(net::decode_weights(bytes.substr(0, 10)), FormatError);
    EXPECT_THROW(net::decode_weights(bytes + "x"), FormatError);
    auto version = bytes;
    version[4] = 2;
    EXPECT_THROW(net::decode_weights(version), FormatError);
}

TEST(Fuzz, DatasetDecoder) {
    const auto r = testkit::fuzz_decoder(sample_dataset(), 1000, 1, [](const std::string& b) { sim::decode_dataset(b); });
    EXPECT_EQ(r.other_errors, 0u) << r.first_other;
    EXPECT_GT(r.format_errors, 0u);
}

TEST(Fuzz, WeightsDecoder) {
    const auto r = testkit::fuzz_decoder(sample_weights(), 1000, 2, [](const std::string& b) { net::decode_weights(b); });
    EXPECT_EQ(r.other_errors, 0u) << r.first_other;
    EXPECT_GT(r.format_errors, 0u);
}

TEST(Fuzz, TcaDecoder) {
    const auto r = testkit::fuzz_decoder(sample_tca(), 1000, 3, [](const std::string& b) { transfer::decode_tca(b); });
    EXPECT_EQ(r.other_errors, 0u) << r.first_other;
    EXPECT_GT(r.format_errors, 0u);
}
