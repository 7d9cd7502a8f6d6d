#include "deepsense/transfer.hpp"

#include "deepsense/binary_io.hpp"
#include "deepsense/errors.hpp"
#include "deepsense/parallel.hpp"
#include "deepsense/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deepsense::transfer {

namespace {

constexpr std::string_view kMagic = "DSTC";
constexpr std::uint32_t kVersion = 1;

void require_points(const RealMatrix& x, const char* what) {
    if (x.cols() == 0) throw DimensionError(std::string(what) + ": empty point set");
}

double stable_sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

}  // namespace

Kernel Kernel::rbf(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("rbf kernel: gamma must be positive");
    return Kernel{Kind::rbf, gamma};
}

Kernel Kernel::linear() { return Kernel{Kind::linear, 0.0}; }

double Kernel::operator()(const RealVector& a, const RealVector& b) const {
    if (a.size() != b.size()) throw DimensionError("kernel: vector lengths differ");
    if (kind == Kind::linear) return a.dot(b);
    return std::exp(-gamma * (a - b).squaredNorm());
}

RealMatrix kernel_matrix(const Kernel& k, const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("kernel_matrix: point dimensions " + std::to_string(a.rows()) + " and " +
                             std::to_string(b.rows()) + " differ");
    RealMatrix g = a.transpose() * b;
    if (k.kind == Kernel::Kind::linear) return g;
    const RealVector na = a.colwise().squaredNorm().transpose();
    const RealVector nb = b.colwise().squaredNorm().transpose();
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            const double d2 = std::max(0.0, na(i) + nb(j) - 2.0 * g(i, j));
            g(i, j) = std::exp(-k.gamma * d2);
        }
    return g;
}

double median_heuristic_gamma(const RealMatrix& x, std::size_t subsample, std::uint64_t seed) {
    require_points(x, "median_heuristic_gamma");
    std::vector<Eigen::Index> cols(static_cast<std::size_t>(x.cols()));
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
    if (cols.size() > subsample) {
        auto rng = make_stream(seed, {0x3ED1});
        std::shuffle(cols.begin(), cols.end(), rng);
        cols.resize(subsample);
        std::sort(cols.begin(), cols.end());
    }
    std::vector<double> d;
    d.reserve(cols.size() * (cols.size() - 1) / 2);
    for (std::size_t i = 0; i < cols.size(); ++i)
        for (std::size_t j = i + 1; j < cols.size(); ++j) d.push_back((x.col(cols[i]) - x.col(cols[j])).norm());
    if (d.empty()) throw FitError("median heuristic needs at least two points");
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    const double med = *mid;
    if (!(med > 0.0)) throw FitError("median pairwise distance is zero; cannot set rbf bandwidth");
    return 1.0 / (2.0 * med * med);
}

double mmd_distance(const RealMatrix& x, const RealMatrix& y, const Kernel& k) {
    require_points(x, "mmd_distance");
    require_points(y, "mmd_distance");
    return kernel_matrix(k, x, x).mean() + kernel_matrix(k, y, y).mean() - 2.0 * kernel_matrix(k, x, y).mean();
}

double mmd_trace_form(const RealMatrix& x, const RealMatrix& y, const Kernel& k) {
    require_points(x, "mmd_trace_form");
    require_points(y, "mmd_trace_form");
    if (x.rows() != y.rows()) throw DimensionError("mmd_trace_form: point dimensions differ");
    const auto n1 = x.cols(), n2 = y.cols(), n = n1 + n2;
    RealMatrix all(x.rows(), n);
    all << x, y;
    const RealMatrix kk = kernel_matrix(k, all, all);
    RealMatrix l(n, n);
    const double a = 1.0 / static_cast<double>(n1 * n1);
    const double b = 1.0 / static_cast<double>(n2 * n2);
    const double c = -1.0 / static_cast<double>(n1 * n2);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) l(i, j) = (i < n1 && j < n1) ? a : (i >= n1 && j >= n1) ? b : c;
    return (kk * l).trace();
}

RealMatrix to_columns(const Dataset& d) { return to_columns(d, 0, d.size()); }

RealMatrix to_columns(const Dataset& d, std::size_t first, std::size_t count) {
    if (first + count > d.size()) throw DimensionError("to_columns: range exceeds dataset");
    const auto dim = static_cast<Eigen::Index>(2 * d.n_samples_per_example);
    RealMatrix out(dim, static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        const auto& iq = d.examples[first + i].iq;
        for (Eigen::Index r = 0; r < dim; ++r) out(r, static_cast<Eigen::Index>(i)) = iq[static_cast<std::size_t>(r)];
    }
    return out;
}

TcaModel tca_fit(const RealMatrix& x_src, const RealMatrix& x_tar, const TcaOptions& opts) {
    require_points(x_src, "tca_fit");
    require_points(x_tar, "tca_fit");
    if (x_src.rows() != x_tar.rows()) throw DimensionError("tca_fit: source and target dimensions differ");
    if (!(opts.mu > 0.0)) throw ArgumentError("tca_fit: mu must be positive");
    const auto n1 = x_src.cols(), n2 = x_tar.cols(), n = n1 + n2;
    if (static_cast<std::size_t>(n) > opts.max_points)
        throw FitError("tca_fit: " + std::to_string(n) + " points exceed the dense solver cap of " +
                       std::to_string(opts.max_points));
    if (opts.m < 1 || opts.m > static_cast<std::size_t>(n))
        throw ArgumentError("tca_fit: m = " + std::to_string(opts.m) + " must be in [1, " + std::to_string(n) + "]");

    TcaModel model;
    model.mu = opts.mu;
    model.m = opts.m;
    model.landmarks.resize(x_src.rows(), n);
    model.landmarks << x_src, x_tar;
    model.kernel = opts.kernel;
    if (model.kernel.kind == Kernel::Kind::rbf && opts.median_gamma)
        model.kernel = Kernel::rbf(median_heuristic_gamma(model.landmarks, 500, opts.seed));

    const RealMatrix k = kernel_matrix(model.kernel, model.landmarks, model.landmarks);
    if (k.cwiseAbs().maxCoeff() == 0.0) throw FitError("tca_fit: kernel matrix is zero");

    // L = e e^T with e_i = 1/n1 (source) or -1/n2 (target), so KLK = (Ke)(Ke)^T.
    RealVector e(n);
    e.head(n1).setConstant(1.0 / static_cast<double>(n1));
    e.tail(n2).setConstant(-1.0 / static_cast<double>(n2));
    const RealVector ke = k * e;
    // KHK = KK - (1/n)(K1)(K1)^T.
    const RealVector k1 = k.rowwise().sum();
    RealMatrix khk = k * k;
    khk.noalias() -= (k1 * k1.transpose()) / static_cast<double>(n);
    khk = 0.5 * (khk + khk.transpose());
    RealMatrix b = ke * ke.transpose();
    b.diagonal().array() += opts.mu;

    const auto pairs = numerics::leading_eigenvectors_of_pencil(khk, b, opts.m);
    const double top = pairs.values(0);
    if (!(top > 0.0)) throw FitError("tca_fit: kernel matrix carries no centered variance");
    for (Eigen::Index i = 0; i < pairs.values.size(); ++i)
        if (!(pairs.values(i) > 1e-12 * top))
            throw FitError("tca_fit: only " + std::to_string(i) + " latent directions carry variance, m = " +
                           std::to_string(opts.m));
    // Eigenvectors are B-orthonormal with V^T KHK V = diag(lambda); rescale to
    // meet W^T KHK W = I.
    model.w = pairs.vectors * pairs.values.cwiseSqrt().cwiseInverse().asDiagonal();
    return model;
}

RealVector tca_transform(const TcaModel& model, const RealVector& x) {
    if (static_cast<std::size_t>(x.size()) != model.input_dim())
        throw DimensionError("tca_transform: input has " + std::to_string(x.size()) + " values, model expects " +
                             std::to_string(model.input_dim()));
    return tca_transform(model, RealMatrix(x)).col(0);
}

RealMatrix tca_transform(const TcaModel& model, const RealMatrix& x) {
    if (static_cast<std::size_t>(x.rows()) != model.input_dim())
        throw DimensionError("tca_transform: input has " + std::to_string(x.rows()) + " values, model expects " +
                             std::to_string(model.input_dim()));
    return model.w.transpose() * kernel_matrix(model.kernel, model.landmarks, x);
}

double LatentClassifier::logit(const RealVector& z) const {
    if (!trained) throw StateError("latent classifier has not been trained");
    if (z.size() != weights.size()) throw DimensionError("latent classifier: feature length mismatch");
    return weights.dot(((z - mean).array() / scale.array()).matrix()) + bias;
}

double LatentClassifier::probability(const RealVector& z) const { return stable_sigmoid(logit(z)); }

LatentClassifier fit_latent_classifier(const RealMatrix& latent, const std::vector<std::uint8_t>& labels,
                                       const ClassifierOptions& opts) {
    const auto n = latent.cols(), m = latent.rows();
    if (n == 0 || static_cast<std::size_t>(n) != labels.size())
        throw DimensionError("fit_latent_classifier: need one label per latent column");
    const auto positives = std::count(labels.begin(), labels.end(), std::uint8_t{1});
    if (positives == 0 || positives == n) throw ArgumentError("fit_latent_classifier: labels contain a single class");
    LatentClassifier c;
    c.mean = latent.rowwise().mean();
    const RealMatrix centered = latent.colwise() - c.mean;
    c.scale = (centered.rowwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
    for (Eigen::Index i = 0; i < m; ++i)
        if (!(c.scale(i) > 1e-12)) c.scale(i) = 1.0;
    // Augmented design: rows are features then a constant 1.
    RealMatrix x(m + 1, n);
    x.topRows(m) = c.scale.cwiseInverse().asDiagonal() * centered;
    x.row(m).setOnes();
    RealVector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    RealVector ridge = RealVector::Constant(m + 1, opts.ridge);
    ridge(m) = 0.0;

    auto objective = [&](const RealVector& theta) {
        const RealVector s = x.transpose() * theta;
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) total += softplus_neg(y(i) > 0.5 ? s(i) : -s(i));
        return total / static_cast<double>(n) + 0.5 * theta.dot(ridge.asDiagonal() * theta);
    };

    RealVector theta = RealVector::Zero(m + 1);
    double f = objective(theta);
    bool converged = false;
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        const RealVector s = x.transpose() * theta;
        RealVector p(n), wgt(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            p(i) = stable_sigmoid(s(i));
            wgt(i) = p(i) * (1.0 - p(i));
        }
        const RealVector grad = x * (p - y) / static_cast<double>(n) + ridge.asDiagonal() * theta;
        if (grad.norm() < opts.tolerance) {
            converged = true;
            break;
        }
        RealMatrix hess = x * wgt.asDiagonal() * x.transpose() / static_cast<double>(n);
        hess.diagonal() += ridge;
        hess.diagonal().array() += 1e-12;
        const RealVector step = hess.ldlt().solve(grad);
        double t = 1.0;
        RealVector next = theta - step;
        double f_next = objective(next);
        while (f_next > f - 1e-4 * t * grad.dot(step) && t > 1e-10) {
            t *= 0.5;
            next = theta - t * step;
            f_next = objective(next);
        }
        if (!(f_next <= f)) break;
        theta = next;
        f = f_next;
    }
    if (!converged) {
        // Re-check at the final iterate; a line search stall at the optimum is fine.
        const RealVector s = x.transpose() * theta;
        RealVector p(n);
        for (Eigen::Index i = 0; i < n; ++i) p(i) = stable_sigmoid(s(i));
        const RealVector grad = x * (p - y) / static_cast<double>(n) + ridge.asDiagonal() * theta;
        if (!(grad.norm() < std::sqrt(opts.tolerance))) throw FitError("latent classifier did not converge");
    }
    c.weights = theta.head(m);
    c.bias = theta(m);
    c.trained = true;
    return c;
}

void train_latent_classifier(TcaModel& model, const Dataset& labeled_src, const ClassifierOptions& opts) {
    if (labeled_src.n_samples_per_example * 2 != model.input_dim())
        throw DimensionError("train_latent_classifier: dataset N does not match the model");
    std::vector<std::uint8_t> labels;
    labels.reserve(labeled_src.size());
    for (const auto& ex : labeled_src.examples) labels.push_back(ex.label);
    model.classifier = fit_latent_classifier(tca_transform(model, to_columns(labeled_src)), labels, opts);
}

double tca_logit(const TcaModel& model, const SensingExample& x) {
    if (!model.classifier.trained) throw StateError("tca_sense: latent classifier has not been trained");
    return model.classifier.logit(tca_transform(model, sim::flatten(x)));
}

double tca_sense(const TcaModel& model, const SensingExample& x) { return stable_sigmoid(tca_logit(model, x)); }

std::vector<double> tca_logits(const TcaModel& model, const Dataset& d, std::size_t threads) {
    if (!model.classifier.trained) throw StateError("tca_sense: latent classifier has not been trained");
    constexpr std::size_t kBlock = 512;
    std::vector<double> out(d.size());
    const std::size_t blocks = (d.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t first = b * kBlock, count = std::min(kBlock, d.size() - first);
        const RealMatrix z = tca_transform(model, to_columns(d, first, count));
        for (std::size_t i = 0; i < count; ++i) out[first + i] = model.classifier.logit(z.col(static_cast<Eigen::Index>(i)));
    });
    return out;
}

std::string encode_tca(const TcaModel& model) {
    io::ByteWriter out;
    out.bytes(kMagic);
    out.u32(kVersion);
    out.u8(static_cast<std::uint8_t>(model.kernel.kind));
    if (model.kernel.kind == Kernel::Kind::rbf) out.f64(model.kernel.gamma);
    out.f64(model.mu);
    out.u32(static_cast<std::uint32_t>(model.m));
    out.u32(static_cast<std::uint32_t>(model.landmarks.cols()));
    out.u32(static_cast<std::uint32_t>(model.landmarks.rows()));
    for (Eigen::Index j = 0; j < model.landmarks.cols(); ++j)
        for (Eigen::Index i = 0; i < model.landmarks.rows(); ++i) out.f32(static_cast<float>(model.landmarks(i, j)));
    for (Eigen::Index i = 0; i < model.w.rows(); ++i)
        for (Eigen::Index j = 0; j < model.w.cols(); ++j) out.f32(static_cast<float>(model.w(i, j)));
    const auto& c = model.classifier;
    out.u8(c.trained ? 1 : 0);
    if (c.trained) {
        for (const RealVector* v : {&c.mean, &c.scale, &c.weights})
            for (Eigen::Index i = 0; i < v->size(); ++i) out.f64((*v)(i));
        out.f64(c.bias);
    }
    return out.release();
}

TcaModel decode_tca(std::string_view bytes) {
    io::ByteReader r(bytes);
    if (r.bytes(4, "magic") != kMagic) throw FormatError("bad TCA checkpoint magic", 0);
    const auto version = r.u32("version");
    if (version != kVersion) throw FormatError("unsupported TCA checkpoint version " + std::to_string(version), 4);
    TcaModel model;
    const auto tag_at = r.offset();
    const auto tag = r.u8("kernel tag");
    if (tag == static_cast<std::uint8_t>(Kernel::Kind::linear)) {
        model.kernel = Kernel::linear();
    } else if (tag == static_cast<std::uint8_t>(Kernel::Kind::rbf)) {
        const auto at = r.offset();
        const double gamma = r.f64("rbf gamma");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw FormatError("rbf gamma must be positive", at);
        model.kernel = Kernel::rbf(gamma);
    } else {
        throw FormatError("unknown kernel tag " + std::to_string(tag), tag_at);
    }
    const auto mu_at = r.offset();
    model.mu = r.f64("mu");
    if (!(model.mu > 0.0) || !std::isfinite(model.mu)) throw FormatError("mu must be positive", mu_at);
    const auto dims_at = r.offset();
    model.m = r.u32("m");
    const auto count = r.u32("landmark count");
    const auto dim = r.u32("landmark dim");
    if (model.m < 1 || model.m > count || dim < 1)
        throw FormatError("inconsistent TCA sizes m = " + std::to_string(model.m) + ", count = " + std::to_string(count) +
                              ", dim = " + std::to_string(dim),
                          dims_at);
    r.require(std::uint64_t{count} * dim + std::uint64_t{count} * model.m, 4, "landmark and projection blocks");
    model.landmarks.resize(dim, count);
    for (Eigen::Index j = 0; j < model.landmarks.cols(); ++j)
        for (Eigen::Index i = 0; i < model.landmarks.rows(); ++i) model.landmarks(i, j) = r.f32("landmarks");
    model.w.resize(count, static_cast<Eigen::Index>(model.m));
    for (Eigen::Index i = 0; i < model.w.rows(); ++i)
        for (Eigen::Index j = 0; j < model.w.cols(); ++j) model.w(i, j) = r.f32("projection");
    if (!model.landmarks.allFinite() || !model.w.allFinite())
        throw FormatError("TCA checkpoint holds non-finite values", dims_at);
    const auto flag_at = r.offset();
    const auto trained = r.u8("classifier flag");
    if (trained > 1) throw FormatError("classifier flag must be 0 or 1", flag_at);
    if (trained) {
        auto& c = model.classifier;
        const auto m = static_cast<Eigen::Index>(model.m);
        for (RealVector* v : {&c.mean, &c.scale, &c.weights}) {
            v->resize(m);
            for (Eigen::Index i = 0; i < m; ++i) (*v)(i) = r.f64("classifier");
        }
        c.bias = r.f64("classifier bias");
        if (!c.mean.allFinite() || !c.weights.allFinite() || !std::isfinite(c.bias) || !(c.scale.array() > 0.0).all())
            throw FormatError("TCA classifier block is invalid", flag_at);
        c.trained = true;
    }
    r.expect_end("TCA checkpoint");
    return model;
}

void save_tca(const TcaModel& model, const std::filesystem::path& path) { io::write_file_atomic(path, encode_tca(model)); }

TcaModel load_tca(const std::filesystem::path& path) { return decode_tca(io::read_file(path)); }

}  // namespace deepsense::transfer
