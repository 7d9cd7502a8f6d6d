#pragma once

#include "deepsense/rng.hpp"
#include "deepsense/signal_sim.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace deepsense::net {

using sim::Dataset;
using sim::SensingExample;

/// Layer sizes of the detector CNN:
///   input 2 x N
///   conv1  conv1_kernels x 2 x N   (1 x kernel_width, stride 1, zero pad)
///   conv2  conv2_kernels x 2 x N
///   dense1 dense1_units
///   dense2 dense2_units (linear)
///   output 1 (logistic)
/// ReLU and dropout after conv1, conv2, dense1. Dense2 and the output affine
/// map together act as a two-class softmax read out as p(y = 1).
struct NetworkSpec {
    std::size_t n_samples = 32;
    std::size_t conv1_kernels = 256;
    std::size_t conv2_kernels = 80;
    std::size_t kernel_width = 9;
    std::size_t padding = 4;
    std::size_t dense1_units = 256;
    std::size_t dense2_units = 2;
    double dropout_rate = 0.5;

    /// Full-size detector for intervals of n samples.
    static NetworkSpec standard(std::size_t n_samples);
    /// Reduced widths (4 / 3 kernels, 8 dense units) for gradient checks.
    static NetworkSpec shrunken(std::size_t n_samples);

    std::size_t flat_features() const noexcept { return conv2_kernels * 2 * n_samples; }
    /// Throws ArgumentError unless the convolutions preserve width.
    void validate() const;

    bool operator==(const NetworkSpec&) const = default;
};

enum class Param : std::size_t {
    conv1_weight,
    conv1_bias,
    conv2_weight,
    conv2_bias,
    dense1_weight,
    dense1_bias,
    dense2_weight,
    dense2_bias,
    output_weight,
    output_bias,
};
inline constexpr std::size_t kParamCount = 10;

const char* param_name(Param p);

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// Learnable parameters. Storage layout per tensor:
///   conv1.weight   conv1_kernels x width
///   conv2.weight   conv2_kernels x (width * conv1_kernels), column = tap * conv1_kernels + in_channel
///   dense1.weight  dense1_units x flat_features, column = channel + conv2_kernels * (row * N + t)
///   dense2.weight  dense2_units x dense1_units
///   output.weight  1 x dense2_units
/// biases are column vectors.
template <typename T>
struct NetworkWeights {
    NetworkSpec spec;
    std::array<Matrix<T>, kParamCount> params;

    static NetworkWeights zeros(const NetworkSpec& spec);

    Matrix<T>& operator[](Param p) { return params[static_cast<std::size_t>(p)]; }
    const Matrix<T>& operator[](Param p) const { return params[static_cast<std::size_t>(p)]; }

    /// Logical tensor dims used by the checkpoint format.
    std::vector<std::uint32_t> dims(Param p) const;
    std::size_t parameter_count() const;
    bool all_finite() const;
    void set_zero();

    template <typename U>
    NetworkWeights<U> cast() const {
        NetworkWeights<U> out;
        out.spec = spec;
        for (std::size_t i = 0; i < kParamCount; ++i) out.params[i] = params[i].template cast<U>();
        return out;
    }
};

enum class InitScheme { he_uniform };

/// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
template <typename T>
NetworkWeights<T> initialize(const NetworkSpec& spec, std::uint64_t seed, InitScheme scheme = InitScheme::he_uniform);

enum class Mode { train, eval };

/// Activations kept for backward. Buffers are reused between batches.
template <typename T>
struct ForwardCache {
    std::size_t batch = 0;
    Matrix<T> patches1;   // width x (2B * N)
    Matrix<T> gate1;      // relu'(z) * dropout scale
    Matrix<T> act1;       // conv1_kernels x (2B * N)
    Matrix<T> patches2;   // (width * conv1_kernels) x (2B * N)
    Matrix<T> gate2;
    Matrix<T> act2;       // conv2_kernels x (2B * N), also the flat dense1 input
    Matrix<T> gate3;
    Matrix<T> act3;       // dense1_units x B
    Matrix<T> act4;       // dense2_units x B
    Matrix<T> logits;     // 1 x B

    // Backward scratch.
    Matrix<T> d_flat;
    Matrix<T> d_patches2;
    Matrix<T> d_act1;
};

/// Packs the listed examples into an N x (2B) matrix; column 2b is the
/// in-phase row of example b, column 2b + 1 its quadrature row.
template <typename T>
Matrix<T> pack_batch(const Dataset& d, std::span<const std::size_t> indices);

template <typename T>
Matrix<T> pack_example(const SensingExample& x);

/// Batched forward pass. Returns the output logits (1 x B). In train mode
/// dropout masks are drawn from `rng` (inverted dropout); eval mode ignores it.
template <typename T>
const Matrix<T>& forward_batch(const NetworkWeights<T>& w, const Matrix<T>& input, Mode mode, RngStream* rng,
                               ForwardCache<T>& cache);

/// Exact gradient of mean BCE over the cached batch. With freeze_conv the
/// conv gradients are exactly zero and not computed.
template <typename T>
void backward(const NetworkWeights<T>& w, ForwardCache<T>& cache,
              std::span<const std::uint8_t> labels, bool freeze_conv, NetworkWeights<T>& grads);

/// Single-interval convenience wrapper: returns p(PU present | x).
template <typename T>
double forward(const SensingExample& x, const NetworkWeights<T>& w, Mode mode, RngStream* rng,
               ForwardCache<T>* cache = nullptr);

inline constexpr double kBceEpsilon = 1e-7;

/// Binary cross-entropy with prob clamped to [eps, 1 - eps].
double bce_loss(double prob, int label);

/// BCE evaluated from a logit, clamped the same way as bce_loss.
double bce_from_logit(double logit, int label);

double sigmoid(double z);

struct TrainConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;
    InitScheme init_scheme = InitScheme::he_uniform;
    bool freeze_conv = false;

    void validate() const;
};

template <typename T>
struct AdamState {
    std::array<Matrix<T>, kParamCount> first;
    std::array<Matrix<T>, kParamCount> second;
    std::uint64_t step = 0;

    static AdamState zeros_like(const NetworkWeights<T>& w);
};

bool is_conv_param(Param p);

/// One bias-corrected Adam update. Conv tensors are left untouched when
/// cfg.freeze_conv is set.
template <typename T>
void adam_step(NetworkWeights<T>& w, const NetworkWeights<T>& grads, AdamState<T>& state, const TrainConfig& cfg);

template <typename T>
struct TrainResult {
    NetworkWeights<T> weights;
    std::vector<double> epoch_loss;  // mean training BCE per epoch (train mode)
};

template <typename T>
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss, const NetworkWeights<T>&)>;

/// Mini-batch Adam over cfg.epochs starting from `init`. Deterministic for a
/// given (dataset, cfg, init): fixed per-epoch shuffles and per-batch
/// dropout streams derived from cfg.seed.
template <typename T>
TrainResult<T> train(const Dataset& d, const TrainConfig& cfg, NetworkWeights<T> init,
                     const EpochCallback<T>& on_epoch = {});

/// Same, from a fresh initialization seeded by cfg.seed.
template <typename T>
TrainResult<T> train(const Dataset& d, const TrainConfig& cfg, const NetworkSpec& spec,
                     const EpochCallback<T>& on_epoch = {});

struct Score {
    double prob = 0.0;
    double logit = 0.0;
    std::uint8_t label = 0;
};

/// Eval-mode scores for every example, in dataset order.
template <typename T>
std::vector<Score> predict_scores(const Dataset& d, const NetworkWeights<T>& w, std::size_t threads = 1);

/// Mean eval-mode BCE over the dataset.
template <typename T>
double mean_loss(const Dataset& d, const NetworkWeights<T>& w);

/// Checkpoint format: "DSNW", u32 version = 1, u32 N, u32 tensor count, then per
/// tensor: u16 name length, ASCII name, u8 rank, u32 dims, float32 payload in
/// row-major order over dims. Adam state is not stored.
std::string encode_weights(const NetworkWeights<float>& w);
NetworkWeights<float> decode_weights(std::string_view bytes);
/// Decodes and checks every tensor shape against `expected`, naming the first mismatching tensor.
NetworkWeights<float> decode_weights(std::string_view bytes, const NetworkSpec& expected);
void save_weights(const NetworkWeights<float>& w, const std::filesystem::path& path);
NetworkWeights<float> load_weights(const std::filesystem::path& path);
NetworkWeights<float> load_weights(const std::filesystem::path& path, const NetworkSpec& expected);

}  // namespace deepsense::net
