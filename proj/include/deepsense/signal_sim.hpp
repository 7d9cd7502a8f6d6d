#pragma once

#include "deepsense/numerics.hpp"
#include "deepsense/rng.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deepsense::sim {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

enum class SignalKind { gaussian_nb, bpsk, qpsk, qam16 };

std::string_view to_string(SignalKind kind);
SignalKind signal_kind_from_string(std::string_view name);

/// SNR in dB; lo == hi means a fixed SNR, otherwise one uniform draw per example.
struct SnrRange {
    double lo_db = -4.0;
    double hi_db = -4.0;

    bool fixed() const noexcept { return lo_db == hi_db; }
};

/// Sample-spaced multipath with exponentially decaying tap powers.
struct RayleighFading {
    std::size_t n_taps = 3;
    double decay_db_per_tap = 3.0;
};

/// Full generative description of one signal domain.
struct ScenarioConfig {
    SignalKind signal_kind = SignalKind::gaussian_nb;
    std::size_t n_samples = 32;
    SnrRange snr_db{};
    double bandwidth_fraction = 0.25;  // Gaussian PU only
    std::size_t sps = 4;               // linear modulations only
    double srrc_rolloff = 0.5;
    std::size_t srrc_span_symbols = 8;
    std::optional<RayleighFading> fading;
    double noise_variance = 1.0;
    std::uint64_t seed = 1;

    /// Throws ArgumentError on any violated invariant.
    void validate() const;
};

/// One sensing interval. `iq` holds the in-phase row followed by the
/// quadrature row, so iq.size() == 2 * N.
struct SensingExample {
    std::vector<float> iq;
    std::uint8_t label = 0;

    std::size_t n_samples() const noexcept { return iq.size() / 2; }
    float in_phase(std::size_t t) const { return iq[t]; }
    float quadrature(std::size_t t) const { return iq[n_samples() + t]; }
};

struct Dataset {
    std::size_t n_samples_per_example = 0;
    std::vector<SensingExample> examples;

    std::size_t size() const noexcept { return examples.size(); }
    bool empty() const noexcept { return examples.empty(); }
    std::size_t positives() const noexcept;
    std::size_t negatives() const noexcept { return size() - positives(); }
};

/// Analytic covariances of the flattened (I; Q) vector under each hypothesis.
struct CovariancePair {
    numerics::RealMatrix c_x;  // PU present
    numerics::RealMatrix c_z;  // noise only
};

/// Unit-average-energy constellation points.
const std::vector<Complex>& constellation(SignalKind kind);

/// Unit-energy square-root raised cosine taps, span * sps + 1 long, centered.
std::vector<double> srrc_taps(double rolloff, std::size_t sps, std::size_t span_symbols);

/// Tap powers 10^(-k * decay / 10), normalized to sum to one.
std::vector<double> fading_tap_powers(std::size_t n_taps, double decay_db_per_tap);

/// One channel realization h[k] ~ CN(0, p_k).
ComplexVector draw_rayleigh_taps(std::size_t n_taps, double decay_db_per_tap, RngStream& rng);

/// Convolves `signal` with a fresh channel realization; output has the input's length.
ComplexVector apply_rayleigh_fading(const ComplexVector& signal, std::size_t n_taps, double decay_db_per_tap,
                                    RngStream& rng);

/// Causal convolution truncated to the signal length.
ComplexVector convolve_truncated(const ComplexVector& signal, const ComplexVector& taps);

/// Normalized-sinc Toeplitz covariance sigma2 * sinc(fraction * (i - j)) of the Gaussian PU.
numerics::RealMatrix gaussian_pu_covariance(std::size_t n, double sigma2, double bandwidth_fraction);

/// Precomputes per-scenario state (Cholesky factor, pulse taps) and draws
/// intervals from a caller-supplied stream. Noise is always drawn first so
/// noise-only intervals are identical across signal kinds for a given stream.
class ScenarioGenerator {
public:
    explicit ScenarioGenerator(ScenarioConfig cfg);

    const ScenarioConfig& config() const noexcept { return cfg_; }

    SensingExample generate(bool occupied, RngStream& rng) const;

    /// Signal component only (no noise). `snr_db_out` receives the SNR drawn
    /// for this interval.
    ComplexVector generate_signal(RngStream& rng, double* snr_db_out = nullptr) const;

    /// Circularly-symmetric white noise of variance noise_variance.
    ComplexVector generate_noise(RngStream& rng) const;

private:
    ComplexVector gaussian_signal(RngStream& rng, double sigma2) const;
    ComplexVector linear_mod_signal(RngStream& rng, double sigma2) const;

    ScenarioConfig cfg_;
    numerics::RealMatrix unit_cholesky_;  // Gaussian PU, sigma2 = 1
    std::vector<double> pulse_;           // linear modulations
};

SensingExample gen_gaussian_nb_interval(const ScenarioConfig& cfg, bool occupied, RngStream& rng);
SensingExample gen_linear_mod_interval(const ScenarioConfig& cfg, bool occupied, RngStream& rng);

/// round(n * occupancy_ratio) positives, labels shuffled by cfg.seed, example i
/// drawn from the substream (cfg.seed, i). Content is independent of `threads`.
Dataset build_dataset(const ScenarioConfig& cfg, std::size_t n, double occupancy_ratio = 0.5,
                      std::size_t threads = 1);

/// Closed-form covariances; Gaussian PU with fixed SNR and no fading only.
CovariancePair analytic_covariances(const ScenarioConfig& cfg);

/// Flattened example as a 64-bit vector (I row then Q row).
numerics::RealVector flatten(const SensingExample& x);

/// Binary dataset format: "DSDS", u32 version = 1, u32 N, u64 count, then per
/// example a u8 label followed by 2N float32 values (I row then Q row).
std::string encode_dataset(const Dataset& d);
Dataset decode_dataset(std::string_view bytes);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

struct DatasetHeader {
    std::uint32_t version = 0;
    std::uint32_t n_samples = 0;
    std::uint64_t count = 0;
};
DatasetHeader read_dataset_header(const std::filesystem::path& path);

}  // namespace deepsense::sim
