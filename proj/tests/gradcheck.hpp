#pragma once

#include "deepsense/deepnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace deepsense::testkit {

struct GradCheckResult {
    double worst_relative = 0.0;
    std::string worst_tensor;
    std::size_t entries = 0;
};

/// Backprop vs central differences on the shrunken network in double precision,
/// train mode with a fixed dropout stream. Biases are randomized so no ReLU sits
/// exactly on its kink. The step is 1e-5: a 1e-3 stencil straddles ReLU kinks
/// often enough that the difference quotient itself is wrong by up to ~0.2.
inline GradCheckResult gradient_check(std::uint64_t seed, std::size_t n_samples = 8, std::size_t batch = 4,
                                      double step = 1e-5) {
    using namespace deepsense::net;
    const auto spec = NetworkSpec::shrunken(n_samples);
    sim::ScenarioConfig cfg;
    cfg.n_samples = n_samples;
    cfg.snr_db = {5.0, 5.0};
    cfg.seed = seed;
    const auto data = sim::build_dataset(cfg, batch);

    auto w = initialize<double>(spec, seed);
    RngStream rng(derive_seed(seed, {0xB1A5}));
    std::uniform_real_distribution<double> bias(-0.1, 0.1);
    for (Param p : {Param::conv1_bias, Param::conv2_bias, Param::dense1_bias, Param::dense2_bias, Param::output_bias})
        for (Eigen::Index i = 0; i < w[p].size(); ++i) w[p].data()[i] = bias(rng);

    std::vector<std::size_t> idx(batch);
    for (std::size_t i = 0; i < batch; ++i) idx[i] = i;
    const auto input = pack_batch<double>(data, idx);
    std::vector<std::uint8_t> labels;
    for (auto i : idx) labels.push_back(data.examples[i].label);

    const std::uint64_t dropout_seed = derive_seed(seed, {0xD0});
    auto loss = [&](const NetworkWeights<double>& ww) {
        ForwardCache<double> cache;
        RngStream r(dropout_seed);
        const auto& logits = forward_batch(ww, input, Mode::train, &r, cache);
        double s = 0.0;
        for (std::size_t b = 0; b < batch; ++b) s += bce_from_logit(logits(0, static_cast<Eigen::Index>(b)), labels[b]);
        return s / static_cast<double>(batch);
    };

    ForwardCache<double> cache;
    RngStream r(dropout_seed);
    forward_batch(w, input, Mode::train, &r, cache);
    auto grads = NetworkWeights<double>::zeros(spec);
    backward(w, cache, labels, false, grads);

    GradCheckResult out;
    for (std::size_t p = 0; p < kParamCount; ++p) {
        for (Eigen::Index i = 0; i < w.params[p].size(); ++i) {
            auto wp = w, wm = w;
            wp.params[p].data()[i] += step;
            wm.params[p].data()[i] -= step;
            const double numeric = (loss(wp) - loss(wm)) / (2.0 * step);
            const double analytic = grads.params[p].data()[i];
            const double rel =
                std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            ++out.entries;
            if (rel > out.worst_relative) {
                out.worst_relative = rel;
                out.worst_tensor = param_name(static_cast<Param>(p));
            }
        }
    }
    return out;
}

}  // namespace deepsense::testkit
