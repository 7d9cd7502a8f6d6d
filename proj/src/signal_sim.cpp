#include "deepsense/signal_sim.hpp"

#include "deepsense/errors.hpp"
#include "deepsense/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace deepsense::sim {

namespace {

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

std::string_view to_string(SignalKind kind) {
    switch (kind) {
        case SignalKind::gaussian_nb: return "gaussian_nb";
        case SignalKind::bpsk: return "bpsk";
        case SignalKind::qpsk: return "qpsk";
        case SignalKind::qam16: return "qam16";
    }
    return "unknown";
}

SignalKind signal_kind_from_string(std::string_view name) {
    if (name == "gaussian_nb" || name == "gaussian") return SignalKind::gaussian_nb;
    if (name == "bpsk") return SignalKind::bpsk;
    if (name == "qpsk") return SignalKind::qpsk;
    if (name == "qam16" || name == "16qam") return SignalKind::qam16;
    throw ArgumentError("unknown signal kind '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
    if (n_samples < 2) throw ArgumentError("scenario: n_samples must be >= 2");
    if (!(snr_db.lo_db <= snr_db.hi_db)) throw ArgumentError("scenario: snr range requires lo <= hi");
    if (!std::isfinite(snr_db.lo_db) || !std::isfinite(snr_db.hi_db)) throw ArgumentError("scenario: snr must be finite");
    if (!(bandwidth_fraction > 0.0 && bandwidth_fraction <= 1.0))
        throw ArgumentError("scenario: bandwidth_fraction must be in (0, 1]");
    if (sps < 1) throw ArgumentError("scenario: sps must be >= 1");
    if (!(srrc_rolloff > 0.0 && srrc_rolloff <= 1.0)) throw ArgumentError("scenario: srrc_rolloff must be in (0, 1]");
    if (srrc_span_symbols < 1) throw ArgumentError("scenario: srrc_span_symbols must be >= 1");
    if (fading && fading->n_taps < 1) throw ArgumentError("scenario: fading needs n_taps >= 1");
    if (!(noise_variance > 0.0)) throw ArgumentError("scenario: noise_variance must be > 0");
}

std::size_t Dataset::positives() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(examples.begin(), examples.end(), [](const SensingExample& e) { return e.label == 1; }));
}

const std::vector<Complex>& constellation(SignalKind kind) {
    static const std::vector<Complex> bpsk{{1.0, 0.0}, {-1.0, 0.0}};
    static const std::vector<Complex> qpsk = [] {
        const double a = 1.0 / std::numbers::sqrt2;
        return std::vector<Complex>{{a, a}, {-a, a}, {-a, -a}, {a, -a}};
    }();
    static const std::vector<Complex> qam16 = [] {
        std::vector<Complex> pts;
        const double scale = 1.0 / std::sqrt(10.0);
        for (int i : {-3, -1, 1, 3})
            for (int q : {-3, -1, 1, 3}) pts.emplace_back(i * scale, q * scale);
        return pts;
    }();
    switch (kind) {
        case SignalKind::bpsk: return bpsk;
        case SignalKind::qpsk: return qpsk;
        case SignalKind::qam16: return qam16;
        case SignalKind::gaussian_nb: break;
    }
    throw ArgumentError("constellation: gaussian_nb has no constellation");
}

std::vector<double> srrc_taps(double rolloff, std::size_t sps, std::size_t span_symbols) {
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ArgumentError("srrc_taps: rolloff must be in (0, 1]");
    if (sps < 1 || span_symbols < 1) throw ArgumentError("srrc_taps: sps and span must be >= 1");
    const auto half = static_cast<long>(span_symbols * sps / 2);
    const double b = rolloff;
    const double pi = std::numbers::pi;
    std::vector<double> h;
    h.reserve(static_cast<std::size_t>(2 * half + 1));
    for (long n = -half; n <= half; ++n) {
        const double t = static_cast<double>(n) / static_cast<double>(sps);
        double v;
        if (n == 0) {
            v = 1.0 - b + 4.0 * b / pi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-12) {
            v = b / std::numbers::sqrt2 *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
        } else {
            v = (std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b))) /
                (pi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t)));
        }
        h.push_back(v);
    }
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double norm = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= norm;
    return h;
}

std::vector<double> fading_tap_powers(std::size_t n_taps, double decay_db_per_tap) {
    if (n_taps < 1) throw ArgumentError("fading: n_taps must be >= 1");
    std::vector<double> p(n_taps);
    double total = 0.0;
    for (std::size_t k = 0; k < n_taps; ++k) {
        p[k] = std::pow(10.0, -static_cast<double>(k) * decay_db_per_tap / 10.0);
        total += p[k];
    }
    for (double& v : p) v /= total;
    return p;
}

ComplexVector draw_rayleigh_taps(std::size_t n_taps, double decay_db_per_tap, RngStream& rng) {
    const auto powers = fading_tap_powers(n_taps, decay_db_per_tap);
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexVector h(n_taps);
    for (std::size_t k = 0; k < n_taps; ++k) {
        const double s = std::sqrt(powers[k] / 2.0);
        const double re = normal(rng);
        const double im = normal(rng);
        h[k] = Complex(s * re, s * im);
    }
    return h;
}

ComplexVector convolve_truncated(const ComplexVector& signal, const ComplexVector& taps) {
    ComplexVector out(signal.size(), Complex(0.0, 0.0));
    for (std::size_t n = 0; n < signal.size(); ++n) {
        Complex acc(0.0, 0.0);
        const std::size_t kmax = std::min(taps.size(), n + 1);
        for (std::size_t k = 0; k < kmax; ++k) acc += taps[k] * signal[n - k];
        out[n] = acc;
    }
    return out;
}

ComplexVector apply_rayleigh_fading(const ComplexVector& signal, std::size_t n_taps, double decay_db_per_tap,
                                    RngStream& rng) {
    return convolve_truncated(signal, draw_rayleigh_taps(n_taps, decay_db_per_tap, rng));
}

numerics::RealMatrix gaussian_pu_covariance(std::size_t n, double sigma2, double bandwidth_fraction) {
    const auto dim = static_cast<Eigen::Index>(n);
    numerics::RealMatrix c(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) c(i, j) = sigma2 * sinc(bandwidth_fraction * static_cast<double>(i - j));
    return c;
}

ScenarioGenerator::ScenarioGenerator(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.signal_kind == SignalKind::gaussian_nb) {
        const auto c = gaussian_pu_covariance(cfg_.n_samples, 1.0, cfg_.bandwidth_fraction);
        try {
            unit_cholesky_ = numerics::cholesky_lower(c, numerics::default_jitter(c));
        } catch (const SingularMatrixError& e) {
            throw GenerationError(std::string("gaussian PU covariance: ") + e.what());
        }
    } else {
        pulse_ = srrc_taps(cfg_.srrc_rolloff, cfg_.sps, cfg_.srrc_span_symbols);
    }
}

ComplexVector ScenarioGenerator::generate_noise(RngStream& rng) const {
    std::normal_distribution<double> normal(0.0, std::sqrt(cfg_.noise_variance / 2.0));
    ComplexVector z(cfg_.n_samples);
    for (auto& v : z) {
        const double re = normal(rng);
        const double im = normal(rng);
        v = Complex(re, im);
    }
    return z;
}

ComplexVector ScenarioGenerator::generate_signal(RngStream& rng, double* snr_db_out) const {
    double snr_db = cfg_.snr_db.lo_db;
    if (!cfg_.snr_db.fixed()) snr_db = std::uniform_real_distribution<double>(cfg_.snr_db.lo_db, cfg_.snr_db.hi_db)(rng);
    if (snr_db_out) *snr_db_out = snr_db;
    const double sigma2 = cfg_.noise_variance * db_to_linear(snr_db);
    if (cfg_.signal_kind == SignalKind::gaussian_nb) return gaussian_signal(rng, sigma2);
    return linear_mod_signal(rng, sigma2);
}

ComplexVector ScenarioGenerator::gaussian_signal(RngStream& rng, double sigma2) const {
    const std::size_t n = cfg_.n_samples;
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::VectorXd re(static_cast<Eigen::Index>(n)), im(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        re[static_cast<Eigen::Index>(i)] = normal(rng);
        im[static_cast<Eigen::Index>(i)] = normal(rng);
    }
    const double scale = std::sqrt(sigma2);
    Eigen::VectorXd sr = unit_cholesky_.triangularView<Eigen::Lower>() * re;
    Eigen::VectorXd si = unit_cholesky_.triangularView<Eigen::Lower>() * im;
    sr *= scale;
    si *= scale;
    ComplexVector s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = Complex(sr[static_cast<Eigen::Index>(i)], si[static_cast<Eigen::Index>(i)]);
    return s;
}

ComplexVector ScenarioGenerator::linear_mod_signal(RngStream& rng, double sigma2) const {
    const std::size_t n = cfg_.n_samples;
    const std::size_t sps = cfg_.sps;
    const std::size_t transient = pulse_.size() - 1;
    // Full-overlap outputs are [transient, n_sym * sps); the window may start
    // up to sps - 1 samples late.
    const std::size_t n_sym = (transient + sps + n + sps - 1) / sps + 1;
    const std::size_t length = n_sym * sps;
    const auto& points = constellation(cfg_.signal_kind);

    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    ComplexVector upsampled(length, Complex(0.0, 0.0));
    for (std::size_t k = 0; k < n_sym; ++k) upsampled[k * sps] = points[pick(rng)];

    ComplexVector shaped(length, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < length; ++i) {
        Complex acc(0.0, 0.0);
        const std::size_t jmax = std::min(pulse_.size(), i + 1);
        for (std::size_t j = 0; j < jmax; ++j) {
            const Complex& u = upsampled[i - j];
            if (u != Complex(0.0, 0.0)) acc += pulse_[j] * u;
        }
        shaped[i] = acc;
    }

    // Unit-energy symbols every sps samples through a unit-energy pulse give
    // average power 1 / sps; fading taps have unit total power.
    const double scale = std::sqrt(sigma2 * static_cast<double>(sps));
    for (auto& v : shaped) v *= scale;
    if (cfg_.fading) shaped = apply_rayleigh_fading(shaped, cfg_.fading->n_taps, cfg_.fading->decay_db_per_tap, rng);

    const std::size_t start = std::uniform_int_distribution<std::size_t>(transient, transient + sps - 1)(rng);
    if (start + n > length) throw GenerationError("linear modulation: generated length too short for window");
    return ComplexVector(shaped.begin() + static_cast<std::ptrdiff_t>(start),
                         shaped.begin() + static_cast<std::ptrdiff_t>(start + n));
}

SensingExample ScenarioGenerator::generate(bool occupied, RngStream& rng) const {
    ComplexVector x = generate_noise(rng);
    if (occupied) {
        const ComplexVector s = generate_signal(rng);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
    }
    const std::size_t n = cfg_.n_samples;
    SensingExample ex;
    ex.label = occupied ? 1 : 0;
    ex.iq.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        ex.iq[i] = static_cast<float>(x[i].real());
        ex.iq[n + i] = static_cast<float>(x[i].imag());
    }
    return ex;
}

SensingExample gen_gaussian_nb_interval(const ScenarioConfig& cfg, bool occupied, RngStream& rng) {
    if (cfg.signal_kind != SignalKind::gaussian_nb)
        throw ArgumentError("gen_gaussian_nb_interval: scenario is not gaussian_nb");
    return ScenarioGenerator(cfg).generate(occupied, rng);
}

SensingExample gen_linear_mod_interval(const ScenarioConfig& cfg, bool occupied, RngStream& rng) {
    if (cfg.signal_kind == SignalKind::gaussian_nb)
        throw ArgumentError("gen_linear_mod_interval: scenario is not a linear modulation");
    return ScenarioGenerator(cfg).generate(occupied, rng);
}

Dataset build_dataset(const ScenarioConfig& cfg, std::size_t n, double occupancy_ratio, std::size_t threads) {
    if (!(occupancy_ratio >= 0.0 && occupancy_ratio <= 1.0))
        throw ArgumentError("build_dataset: occupancy_ratio must be in [0, 1]");
    const ScenarioGenerator gen(cfg);
    const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n) * occupancy_ratio));
    std::vector<std::uint8_t> labels(n, 0);
    std::fill_n(labels.begin(), std::min(n_pos, n), std::uint8_t{1});
    auto shuffle_rng = make_stream(cfg.seed, {0x5f1e});
    std::shuffle(labels.begin(), labels.end(), shuffle_rng);

    Dataset d;
    d.n_samples_per_example = cfg.n_samples;
    d.examples.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        auto rng = make_stream(cfg.seed, {1, i});
        d.examples[i] = gen.generate(labels[i] == 1, rng);
    });
    return d;
}

CovariancePair analytic_covariances(const ScenarioConfig& cfg) {
    cfg.validate();
    if (cfg.signal_kind != SignalKind::gaussian_nb)
        throw UnsupportedScenarioError("analytic covariances exist only for the gaussian_nb scenario, got " +
                                       std::string(to_string(cfg.signal_kind)));
    if (!cfg.snr_db.fixed()) throw UnsupportedScenarioError("analytic covariances need a fixed SNR");
    if (cfg.fading) throw UnsupportedScenarioError("analytic covariances do not model fading");
    const std::size_t n = cfg.n_samples;
    const auto dim = static_cast<Eigen::Index>(n);
    const double sigma2 = cfg.noise_variance * db_to_linear(cfg.snr_db.lo_db);
    numerics::ComplexMatrix noise = numerics::ComplexMatrix::Identity(dim, dim) * cfg.noise_variance;
    numerics::ComplexMatrix total = noise;
    total.real() += gaussian_pu_covariance(n, sigma2, cfg.bandwidth_fraction);
    return CovariancePair{numerics::complex_to_real_composite(total), numerics::complex_to_real_composite(noise)};
}

numerics::RealVector flatten(const SensingExample& x) {
    numerics::RealVector v(static_cast<Eigen::Index>(x.iq.size()));
    for (std::size_t i = 0; i < x.iq.size(); ++i) v[static_cast<Eigen::Index>(i)] = x.iq[i];
    return v;
}

}  // namespace deepsense::sim
