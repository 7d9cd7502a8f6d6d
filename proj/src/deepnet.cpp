#include "deepsense/deepnet.hpp"

#include "deepsense/errors.hpp"
#include "deepsense/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deepsense::net {

namespace {

constexpr std::size_t kEvalBatch = 128;

template <typename T>
using ConstMap = Eigen::Map<const Matrix<T>>;
template <typename T>
using MutMap = Eigen::Map<Matrix<T>>;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// gate = relu'(z) * keep / (1 - rate). In train mode keep ~ Bernoulli(1 - rate)
// from a counter hash keyed by one draw of `rng`; eval mode keeps everything.
template <typename T>
void make_gate(const Matrix<T>& z, Matrix<T>& gate, double rate, RngStream* rng) {
    gate.resize(z.rows(), z.cols());
    const Eigen::Index n = z.size();
    const T* zp = z.data();
    T* gp = gate.data();
    if (!rng || rate <= 0.0) {
        for (Eigen::Index i = 0; i < n; ++i) gp[i] = zp[i] > T(0) ? T(1) : T(0);
        return;
    }
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    const auto threshold = static_cast<std::uint32_t>(std::min(rate * 4294967296.0, 4294967295.0));
    const std::uint64_t key = (*rng)();
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::uint32_t>(splitmix64(key + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL) >> 32);
        gp[i] = (zp[i] > T(0) && u >= threshold) ? scale : T(0);
    }
}

// Copies tap `k` of every sequence from `src` (channels x S*N) into rows
// [k*C, (k+1)*C) of `dst`, zeroing positions that fall in the padding.
template <typename Src, typename T>
void gather_taps(const Eigen::MatrixBase<Src>& src, Matrix<T>& dst, std::size_t channels, std::size_t sequences,
                 std::size_t n, std::size_t width, std::size_t pad) {
    const auto c = idx(channels);
    dst.resize(idx(width * channels), idx(sequences * n));
    for (std::size_t k = 0; k < width; ++k) {
        const long off = static_cast<long>(k) - static_cast<long>(pad);
        const long lo = std::max(0L, -off);
        const long hi = std::min(static_cast<long>(n), static_cast<long>(n) - off);
        for (std::size_t s = 0; s < sequences; ++s) {
            const long base = static_cast<long>(s * n);
            const auto row = idx(k * channels);
            if (hi > lo) dst.block(row, base + lo, c, hi - lo) = src.block(0, base + lo + off, c, hi - lo);
            if (lo > 0) dst.block(row, base, c, std::min(lo, static_cast<long>(n))).setZero();
            if (hi < static_cast<long>(n)) {
                const long from = std::max(hi, 0L);
                dst.block(row, base + from, c, static_cast<long>(n) - from).setZero();
            }
        }
    }
}

template <typename T>
void require_input(const NetworkSpec& spec, const Matrix<T>& input) {
    if (input.rows() != idx(spec.n_samples) || input.cols() % 2 != 0 || input.cols() == 0)
        throw DimensionError("network input is " + std::to_string(input.rows()) + "x" + std::to_string(input.cols()) +
                             ", expected " + std::to_string(spec.n_samples) + " x 2B");
}

}  // namespace

NetworkSpec NetworkSpec::standard(std::size_t n_samples) {
    NetworkSpec s;
    s.n_samples = n_samples;
    return s;
}

NetworkSpec NetworkSpec::shrunken(std::size_t n_samples) {
    NetworkSpec s;
    s.n_samples = n_samples;
    s.conv1_kernels = 4;
    s.conv2_kernels = 3;
    s.dense1_units = 8;
    return s;
}

void NetworkSpec::validate() const {
    if (n_samples < 1) throw ArgumentError("network spec: n_samples must be >= 1");
    if (conv1_kernels < 1 || conv2_kernels < 1 || dense1_units < 1 || dense2_units < 1)
        throw ArgumentError("network spec: layer widths must be >= 1");
    if (kernel_width != 2 * padding + 1)
        throw ArgumentError("network spec: kernel width " + std::to_string(kernel_width) + " with padding " +
                            std::to_string(padding) + " does not preserve width");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ArgumentError("network spec: dropout_rate must be in [0, 1)");
}

const char* param_name(Param p) {
    switch (p) {
        case Param::conv1_weight: return "conv1.weight";
        case Param::conv1_bias: return "conv1.bias";
        case Param::conv2_weight: return "conv2.weight";
        case Param::conv2_bias: return "conv2.bias";
        case Param::dense1_weight: return "dense1.weight";
        case Param::dense1_bias: return "dense1.bias";
        case Param::dense2_weight: return "dense2.weight";
        case Param::dense2_bias: return "dense2.bias";
        case Param::output_weight: return "output.weight";
        case Param::output_bias: return "output.bias";
    }
    return "?";
}

bool is_conv_param(Param p) {
    return p == Param::conv1_weight || p == Param::conv1_bias || p == Param::conv2_weight || p == Param::conv2_bias;
}

template <typename T>
NetworkWeights<T> NetworkWeights<T>::zeros(const NetworkSpec& spec) {
    spec.validate();
    NetworkWeights<T> w;
    w.spec = spec;
    const auto c1 = idx(spec.conv1_kernels), c2 = idx(spec.conv2_kernels), k = idx(spec.kernel_width);
    const auto d1 = idx(spec.dense1_units), d2 = idx(spec.dense2_units), f = idx(spec.flat_features());
    w[Param::conv1_weight] = Matrix<T>::Zero(c1, k);
    w[Param::conv1_bias] = Matrix<T>::Zero(c1, 1);
    w[Param::conv2_weight] = Matrix<T>::Zero(c2, k * c1);
    w[Param::conv2_bias] = Matrix<T>::Zero(c2, 1);
    w[Param::dense1_weight] = Matrix<T>::Zero(d1, f);
    w[Param::dense1_bias] = Matrix<T>::Zero(d1, 1);
    w[Param::dense2_weight] = Matrix<T>::Zero(d2, d1);
    w[Param::dense2_bias] = Matrix<T>::Zero(d2, 1);
    w[Param::output_weight] = Matrix<T>::Zero(1, d2);
    w[Param::output_bias] = Matrix<T>::Zero(1, 1);
    return w;
}

template <typename T>
std::vector<std::uint32_t> NetworkWeights<T>::dims(Param p) const {
    auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
    switch (p) {
        case Param::conv1_weight: return {u(spec.conv1_kernels), u(spec.kernel_width)};
        case Param::conv1_bias: return {u(spec.conv1_kernels)};
        case Param::conv2_weight: return {u(spec.conv2_kernels), u(spec.kernel_width), u(spec.conv1_kernels)};
        case Param::conv2_bias: return {u(spec.conv2_kernels)};
        case Param::dense1_weight: return {u(spec.dense1_units), u(spec.flat_features())};
        case Param::dense1_bias: return {u(spec.dense1_units)};
        case Param::dense2_weight: return {u(spec.dense2_units), u(spec.dense1_units)};
        case Param::dense2_bias: return {u(spec.dense2_units)};
        case Param::output_weight: return {1, u(spec.dense2_units)};
        case Param::output_bias: return {1};
    }
    return {};
}

template <typename T>
std::size_t NetworkWeights<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& m : params) n += static_cast<std::size_t>(m.size());
    return n;
}

template <typename T>
bool NetworkWeights<T>::all_finite() const {
    return std::all_of(params.begin(), params.end(), [](const Matrix<T>& m) { return m.allFinite(); });
}

template <typename T>
void NetworkWeights<T>::set_zero() {
    for (auto& m : params) m.setZero();
}

template <typename T>
NetworkWeights<T> initialize(const NetworkSpec& spec, std::uint64_t seed, InitScheme scheme) {
    if (scheme != InitScheme::he_uniform) throw ArgumentError("unknown init scheme");
    auto w = NetworkWeights<T>::zeros(spec);
    auto rng = make_stream(seed, {0x1417});
    const std::pair<Param, std::size_t> fan_in[] = {
        {Param::conv1_weight, spec.kernel_width},
        {Param::conv2_weight, spec.kernel_width * spec.conv1_kernels},
        {Param::dense1_weight, spec.flat_features()},
        {Param::dense2_weight, spec.dense1_units},
        {Param::output_weight, spec.dense2_units},
    };
    for (const auto& [p, fan] : fan_in) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan));
        std::uniform_real_distribution<double> u(-limit, limit);
        auto& m = w[p];
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
    }
    return w;
}

template <typename T>
Matrix<T> pack_batch(const Dataset& d, std::span<const std::size_t> indices) {
    const std::size_t n = d.n_samples_per_example;
    Matrix<T> x(idx(n), idx(2 * indices.size()));
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& ex = d.examples.at(indices[b]);
        if (ex.iq.size() != 2 * n) throw DimensionError("pack_batch: example length does not match dataset N");
        for (std::size_t t = 0; t < n; ++t) {
            x(idx(t), idx(2 * b)) = static_cast<T>(ex.iq[t]);
            x(idx(t), idx(2 * b + 1)) = static_cast<T>(ex.iq[n + t]);
        }
    }
    return x;
}

template <typename T>
Matrix<T> pack_example(const SensingExample& x) {
    const std::size_t n = x.n_samples();
    Matrix<T> m(idx(n), 2);
    for (std::size_t t = 0; t < n; ++t) {
        m(idx(t), 0) = static_cast<T>(x.iq[t]);
        m(idx(t), 1) = static_cast<T>(x.iq[n + t]);
    }
    return m;
}

template <typename T>
const Matrix<T>& forward_batch(const NetworkWeights<T>& w, const Matrix<T>& input, Mode mode, RngStream* rng,
                               ForwardCache<T>& cache) {
    const NetworkSpec& spec = w.spec;
    require_input(spec, input);
    const std::size_t n = spec.n_samples;
    const std::size_t seqs = static_cast<std::size_t>(input.cols());
    const std::size_t batch = seqs / 2;
    const auto cols = idx(seqs * n);
    const double rate = spec.dropout_rate;
    RngStream* drop = (mode == Mode::train) ? rng : nullptr;
    if (mode == Mode::train && rate > 0.0 && !rng) throw ArgumentError("forward: train mode needs a dropout stream");
    cache.batch = batch;

    // conv1: the input is a single channel, so its patches are gathered from
    // the N x S input viewed as 1 x (S*N).
    ConstMap<T> flat_input(input.data(), 1, cols);
    gather_taps(flat_input, cache.patches1, 1, seqs, n, spec.kernel_width, spec.padding);
    cache.act1.noalias() = w[Param::conv1_weight] * cache.patches1;
    cache.act1.colwise() += w[Param::conv1_bias].col(0);
    make_gate(cache.act1, cache.gate1, rate, drop);
    cache.act1.array() *= cache.gate1.array();

    gather_taps(cache.act1, cache.patches2, spec.conv1_kernels, seqs, n, spec.kernel_width, spec.padding);
    cache.act2.noalias() = w[Param::conv2_weight] * cache.patches2;
    cache.act2.colwise() += w[Param::conv2_bias].col(0);
    make_gate(cache.act2, cache.gate2, rate, drop);
    cache.act2.array() *= cache.gate2.array();

    // Columns of one example are contiguous, so the conv2 output doubles as
    // the flat_features x B dense input.
    ConstMap<T> flat(cache.act2.data(), idx(spec.flat_features()), idx(batch));
    cache.act3.noalias() = w[Param::dense1_weight] * flat;
    cache.act3.colwise() += w[Param::dense1_bias].col(0);
    make_gate(cache.act3, cache.gate3, rate, drop);
    cache.act3.array() *= cache.gate3.array();

    // Dense2 is the linear two-logit layer; the head turns the pair into one
    // logistic output.
    cache.act4.noalias() = w[Param::dense2_weight] * cache.act3;
    cache.act4.colwise() += w[Param::dense2_bias].col(0);

    cache.logits.noalias() = w[Param::output_weight] * cache.act4;
    cache.logits.array() += w[Param::output_bias](0, 0);
    return cache.logits;
}

template <typename T>
void backward(const NetworkWeights<T>& w, ForwardCache<T>& cache, std::span<const std::uint8_t> labels,
              bool freeze_conv, NetworkWeights<T>& grads) {
    const NetworkSpec& spec = w.spec;
    const std::size_t batch = cache.batch;
    if (labels.size() != batch) throw DimensionError("backward: label count does not match cached batch");
    if (!(grads.spec == spec)) grads = NetworkWeights<T>::zeros(spec);
    const std::size_t n = spec.n_samples;
    const std::size_t seqs = 2 * batch;

    Matrix<T> d_logit(1, idx(batch));
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b)
        d_logit(0, idx(b)) = static_cast<T>((sigmoid(static_cast<double>(cache.logits(0, idx(b)))) - labels[b]) * inv_b);

    grads[Param::output_weight].noalias() = d_logit * cache.act4.transpose();
    grads[Param::output_bias](0, 0) = d_logit.sum();

    const Matrix<T> d4 = w[Param::output_weight].transpose() * d_logit;
    grads[Param::dense2_weight].noalias() = d4 * cache.act3.transpose();
    grads[Param::dense2_bias] = d4.rowwise().sum();

    Matrix<T> d3 = (w[Param::dense2_weight].transpose() * d4).cwiseProduct(cache.gate3);
    ConstMap<T> flat(cache.act2.data(), idx(spec.flat_features()), idx(batch));
    grads[Param::dense1_weight].noalias() = d3 * flat.transpose();
    grads[Param::dense1_bias] = d3.rowwise().sum();

    if (freeze_conv) {
        grads[Param::conv1_weight].setZero();
        grads[Param::conv1_bias].setZero();
        grads[Param::conv2_weight].setZero();
        grads[Param::conv2_bias].setZero();
        return;
    }

    cache.d_flat.noalias() = w[Param::dense1_weight].transpose() * d3;
    MutMap<T> d2(cache.d_flat.data(), idx(spec.conv2_kernels), idx(seqs * n));
    d2.array() *= cache.gate2.array();
    grads[Param::conv2_weight] = (cache.patches2 * d2.transpose()).transpose();
    grads[Param::conv2_bias] = d2.rowwise().sum();

    // Input gradient of conv2 is a convolution of d2 with the tap-reversed
    // kernels: d_act1[c, t] = sum_{k, o} W2[o, k, c] * d2[o, t + pad - k].
    const std::size_t c1 = spec.conv1_kernels, c2 = spec.conv2_kernels, width = spec.kernel_width;
    Matrix<T> flipped(idx(c1), idx(width * c2));
    const auto& w2 = w[Param::conv2_weight];
    for (std::size_t k = 0; k < width; ++k)
        flipped.middleCols(idx(k * c2), idx(c2)) = w2.middleCols(idx((width - 1 - k) * c1), idx(c1)).transpose();
    gather_taps(d2, cache.d_patches2, c2, seqs, n, width, spec.padding);
    cache.d_act1.noalias() = flipped * cache.d_patches2;
    cache.d_act1.array() *= cache.gate1.array();
    grads[Param::conv1_weight].noalias() = cache.d_act1 * cache.patches1.transpose();
    grads[Param::conv1_bias] = cache.d_act1.rowwise().sum();
}

template <typename T>
double forward(const SensingExample& x, const NetworkWeights<T>& w, Mode mode, RngStream* rng, ForwardCache<T>* cache) {
    if (x.n_samples() != w.spec.n_samples || x.iq.size() != 2 * w.spec.n_samples)
        throw DimensionError("forward: interval has " + std::to_string(x.n_samples()) + " samples, network expects " +
                             std::to_string(w.spec.n_samples));
    ForwardCache<T> local;
    ForwardCache<T>& c = cache ? *cache : local;
    const auto input = pack_example<T>(x);
    const auto& logits = forward_batch(w, input, mode, rng, c);
    return sigmoid(static_cast<double>(logits(0, 0)));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_loss(double prob, int label) {
    const double p = std::clamp(prob, kBceEpsilon, 1.0 - kBceEpsilon);
    return -(label * std::log(p) + (1 - label) * std::log(1.0 - p));
}

double bce_from_logit(double logit, int label) { return bce_loss(sigmoid(logit), label); }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ArgumentError("train config: learning_rate must be > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ArgumentError("train config: Adam betas must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw ArgumentError("train config: adam_eps must be > 0");
    if (batch_size < 1) throw ArgumentError("train config: batch_size must be >= 1");
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const NetworkWeights<T>& w) {
    AdamState<T> s;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        s.first[i] = Matrix<T>::Zero(w.params[i].rows(), w.params[i].cols());
        s.second[i] = Matrix<T>::Zero(w.params[i].rows(), w.params[i].cols());
    }
    return s;
}

template <typename T>
void adam_step(NetworkWeights<T>& w, const NetworkWeights<T>& grads, AdamState<T>& state, const TrainConfig& cfg) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const auto b1 = static_cast<T>(cfg.adam_beta1);
    const auto b2 = static_cast<T>(cfg.adam_beta2);
    const auto bc1 = static_cast<T>(1.0 - std::pow(cfg.adam_beta1, t));
    const auto bc2 = static_cast<T>(1.0 - std::pow(cfg.adam_beta2, t));
    const auto lr = static_cast<T>(cfg.learning_rate);
    const auto eps = static_cast<T>(cfg.adam_eps);
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (cfg.freeze_conv && is_conv_param(static_cast<Param>(i))) continue;
        const auto& g = grads.params[i].array();
        if (grads.params[i].size() != w.params[i].size() || state.first[i].size() != w.params[i].size())
            throw DimensionError(std::string("adam_step: shape mismatch in ") + param_name(static_cast<Param>(i)));
        auto m = state.first[i].array();
        auto v = state.second[i].array();
        m = b1 * m + (T(1) - b1) * g;
        v = b2 * v + (T(1) - b2) * g.square();
        w.params[i].array() -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
    }
}

template <typename T>
TrainResult<T> train(const Dataset& d, const TrainConfig& cfg, NetworkWeights<T> init, const EpochCallback<T>& on_epoch) {
    cfg.validate();
    init.spec.validate();
    if (d.empty()) throw ArgumentError("train: dataset is empty");
    if (d.n_samples_per_example != init.spec.n_samples)
        throw DimensionError("train: dataset N = " + std::to_string(d.n_samples_per_example) + ", network N = " +
                             std::to_string(init.spec.n_samples));

    TrainResult<T> result{std::move(init), {}};
    auto& w = result.weights;
    auto state = AdamState<T>::zeros_like(w);
    auto grads = NetworkWeights<T>::zeros(w.spec);
    ForwardCache<T> cache;

    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::uint8_t> labels;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto shuffle_rng = make_stream(cfg.seed, {0xE90C, epoch});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double total = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> slice(order.data() + start, count);
            const auto input = pack_batch<T>(d, slice);
            labels.resize(count);
            for (std::size_t b = 0; b < count; ++b) labels[b] = d.examples[slice[b]].label;

            auto drop_rng = make_stream(cfg.seed, {0xD809, epoch, batch_index});
            const auto& logits = forward_batch(w, input, Mode::train, &drop_rng, cache);
            double batch_loss = 0.0;
            for (std::size_t b = 0; b < count; ++b)
                batch_loss += bce_from_logit(static_cast<double>(logits(0, idx(b))), labels[b]);
            if (!std::isfinite(batch_loss) || !logits.allFinite()) throw DivergedTrainingError(epoch, batch_index);
            total += batch_loss;

            backward(w, cache, std::span<const std::uint8_t>(labels), cfg.freeze_conv, grads);
            adam_step(w, grads, state, cfg);
        }
        result.epoch_loss.push_back(total / static_cast<double>(d.size()));
        if (on_epoch) on_epoch(epoch, result.epoch_loss.back(), w);
    }
    return result;
}

template <typename T>
TrainResult<T> train(const Dataset& d, const TrainConfig& cfg, const NetworkSpec& spec, const EpochCallback<T>& on_epoch) {
    return train<T>(d, cfg, initialize<T>(spec, cfg.seed, cfg.init_scheme), on_epoch);
}

template <typename T>
std::vector<Score> predict_scores(const Dataset& d, const NetworkWeights<T>& w, std::size_t threads) {
    if (d.n_samples_per_example != w.spec.n_samples && !d.empty())
        throw DimensionError("predict_scores: dataset N = " + std::to_string(d.n_samples_per_example) +
                             ", network N = " + std::to_string(w.spec.n_samples));
    std::vector<Score> out(d.size());
    const std::size_t n_batches = (d.size() + kEvalBatch - 1) / kEvalBatch;
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n_batches));
    parallel_for(workers, workers, [&](std::size_t worker) {
        ForwardCache<T> cache;
        std::vector<std::size_t> slice;
        for (std::size_t b = worker; b < n_batches; b += workers) {
            const std::size_t start = b * kEvalBatch;
            const std::size_t count = std::min(kEvalBatch, d.size() - start);
            slice.resize(count);
            std::iota(slice.begin(), slice.end(), start);
            const auto input = pack_batch<T>(d, slice);
            const auto& logits = forward_batch(w, input, Mode::eval, nullptr, cache);
            for (std::size_t i = 0; i < count; ++i) {
                const double z = static_cast<double>(logits(0, idx(i)));
                out[start + i] = Score{sigmoid(z), z, d.examples[start + i].label};
            }
        }
    });
    return out;
}

template <typename T>
double mean_loss(const Dataset& d, const NetworkWeights<T>& w) {
    if (d.empty()) throw ArgumentError("mean_loss: dataset is empty");
    double total = 0.0;
    for (const auto& s : predict_scores(d, w)) total += bce_loss(s.prob, s.label);
    return total / static_cast<double>(d.size());
}

#define DEEPSENSE_INSTANTIATE(T)                                                                                   \
    template struct NetworkWeights<T>;                                                                             \
    template struct AdamState<T>;                                                                                  \
    template NetworkWeights<T> initialize<T>(const NetworkSpec&, std::uint64_t, InitScheme);                       \
    template Matrix<T> pack_batch<T>(const Dataset&, std::span<const std::size_t>);                                \
    template Matrix<T> pack_example<T>(const SensingExample&);                                                     \
    template const Matrix<T>& forward_batch<T>(const NetworkWeights<T>&, const Matrix<T>&, Mode, RngStream*,       \
                                               ForwardCache<T>&);                                                  \
    template void backward<T>(const NetworkWeights<T>&, ForwardCache<T>&, std::span<const std::uint8_t>, bool,     \
                              NetworkWeights<T>&);                                                                 \
    template double forward<T>(const SensingExample&, const NetworkWeights<T>&, Mode, RngStream*, ForwardCache<T>*); \
    template void adam_step<T>(NetworkWeights<T>&, const NetworkWeights<T>&, AdamState<T>&, const TrainConfig&);   \
    template TrainResult<T> train<T>(const Dataset&, const TrainConfig&, NetworkWeights<T>, const EpochCallback<T>&); \
    template TrainResult<T> train<T>(const Dataset&, const TrainConfig&, const NetworkSpec&, const EpochCallback<T>&); \
    template std::vector<Score> predict_scores<T>(const Dataset&, const NetworkWeights<T>&, std::size_t);          \
    template double mean_loss<T>(const Dataset&, const NetworkWeights<T>&);

DEEPSENSE_INSTANTIATE(float)
DEEPSENSE_INSTANTIATE(double)

#undef DEEPSENSE_INSTANTIATE

}  // namespace deepsense::net
