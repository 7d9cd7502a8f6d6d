#include "deepsense/detectors.hpp"
#include "deepsense/errors.hpp"
#include "deepsense/transfer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace deepsense;
using namespace deepsense::transfer;

namespace {

sim::ScenarioConfig gaussian(std::uint64_t seed, std::size_t n = 32) {
    sim::ScenarioConfig c;
    c.n_samples = n;
    c.snr_db = {-4.0, -4.0};
    c.seed = seed;
    return c;
}

sim::ScenarioConfig qpsk(std::uint64_t seed, std::size_t n = 32) {
    sim::ScenarioConfig c;
    c.signal_kind = sim::SignalKind::qpsk;
    c.n_samples = n;
    c.snr_db = {-4.0, -2.0};
    c.fading = sim::RayleighFading{};
    c.seed = seed;
    return c;
}

RealMatrix random_points(std::size_t d, std::size_t n, std::uint64_t seed, double shift = 0.0) {
    RngStream rng(seed);
    std::normal_distribution<double> normal(shift, 1.0);
    RealMatrix x(d, n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    return x;
}

RealMatrix stacked_kernel(const TcaModel& m) { return kernel_matrix(m.kernel, m.landmarks, m.landmarks); }

RealMatrix centering_form(const RealMatrix& k) {
    const auto n = k.rows();
    const RealMatrix h = RealMatrix::Identity(n, n) - RealMatrix::Constant(n, n, 1.0 / static_cast<double>(n));
    return k * h * k;
}

RealMatrix mmd_form(const RealMatrix& k, Eigen::Index n1) {
    const auto n = k.rows();
    RealVector e(n);
    for (Eigen::Index i = 0; i < n; ++i) e[i] = i < n1 ? 1.0 / static_cast<double>(n1) : -1.0 / static_cast<double>(n - n1);
    const RealVector ke = k * e;
    return ke * ke.transpose();
}

}  // namespace

TEST(Mmd, SameSampleIsZero) {
    const RealMatrix x = random_points(5, 40, 1);
    EXPECT_NEAR(mmd_distance(x, x, Kernel::rbf(0.2)), 0.0, 1e-12);
    EXPECT_NEAR(mmd_distance(x, x, Kernel::linear()), 0.0, 1e-12);
}

TEST(Mmd, LinearKernelIsSquaredMeanGap) {
    RealMatrix x(2, 1), y(2, 1);
    x << 1, 0;
    y << 0, 0;
    EXPECT_DOUBLE_EQ(mmd_distance(x, y, Kernel::linear()), 1.0);
    const RealMatrix a = random_points(3, 30, 2), b = random_points(3, 20, 3, 0.5);
    const double gap = (a.rowwise().mean() - b.rowwise().mean()).squaredNorm();
    EXPECT_NEAR(mmd_distance(a, b, Kernel::linear()), gap, 1e-12);
}

TEST(Mmd, TwoFormulasAgree) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const RealMatrix x = random_points(6, 30 + seed, seed);
        const RealMatrix y = random_points(6, 25, 100 + seed, 0.3);
        for (const auto& k : {Kernel::rbf(0.1), Kernel::rbf(1.0), Kernel::linear()})
            EXPECT_NEAR(mmd_distance(x, y, k), mmd_trace_form(x, y, k), 1e-10);
    }
}

TEST(Kernel, MedianHeuristic) {
    // Three collinear points at 0, 1, 3: distances 1, 2, 3, median 2.
    RealMatrix x(1, 3);
    x << 0, 1, 3;
    EXPECT_DOUBLE_EQ(median_heuristic_gamma(x), 1.0 / 8.0);
    const RealMatrix big = random_points(4, 2000, 5);
    EXPECT_EQ(median_heuristic_gamma(big, 500, 7), median_heuristic_gamma(big, 500, 7));
    EXPECT_GT(median_heuristic_gamma(big, 500, 7), 0.0);
}

TEST(Kernel, MatrixMatchesPointwise) {
    const RealMatrix a = random_points(3, 7, 8), b = random_points(3, 5, 9);
    const auto k = Kernel::rbf(0.4);
    const RealMatrix m = kernel_matrix(k, a, b);
    for (Eigen::Index i = 0; i < 7; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(m(i, j), k(a.col(i), b.col(j)), 1e-14);
}

class TcaFixture : public ::testing::Test {
protected:
    void SetUp() override {
        src = to_columns(sim::build_dataset(qpsk(11), 60));
        tar = to_columns(sim::build_dataset(gaussian(12), 60));
        opts.m = 4;
        opts.mu = 1.0;
        model = tca_fit(src, tar, opts);
    }
    RealMatrix src, tar;
    TcaOptions opts;
    TcaModel model;
};

TEST_F(TcaFixture, ConstraintHolds) {
    const RealMatrix khk = centering_form(stacked_kernel(model));
    EXPECT_LE((model.w.transpose() * khk * model.w - RealMatrix::Identity(4, 4)).norm(), 1e-6);
}

TEST_F(TcaFixture, ObjectiveBeatsRandomFeasibleDirections) {
    const RealMatrix k = stacked_kernel(model);
    const RealMatrix khk = centering_form(k);
    const RealMatrix klk = mmd_form(k, src.cols());
    auto objective = [&](const RealMatrix& w) { return (w.transpose() * klk * w).trace() + opts.mu * (w.transpose() * w).trace(); };
    const double best = objective(model.w);

    // Random competitors orthonormalized against KHK through its eigenbasis.
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(khk);
    const auto n = khk.rows();
    RngStream rng(21);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        RealMatrix g(n, 4);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        // Restrict to the well-conditioned range of KHK, then whiten.
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < n; ++i)
            if (es.eigenvalues()[i] > 1e-6 * es.eigenvalues().maxCoeff()) keep.push_back(i);
        RealMatrix u(n, static_cast<Eigen::Index>(keep.size()));
        RealVector inv_sqrt(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
            u.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
            inv_sqrt[static_cast<Eigen::Index>(j)] = 1.0 / std::sqrt(es.eigenvalues()[keep[j]]);
        }
        RealMatrix c = RealMatrix(u.transpose() * g);
        Eigen::HouseholderQR<RealMatrix> qr(c);
        const RealMatrix q = qr.householderQ() * RealMatrix::Identity(c.rows(), 4);
        const RealMatrix w = u * inv_sqrt.asDiagonal() * q;
        ASSERT_LT((w.transpose() * khk * w - RealMatrix::Identity(4, 4)).norm(), 1e-6);
        EXPECT_LE(best, objective(w) + 1e-9);
    }
}

TEST_F(TcaFixture, TransformOfLandmarksReproducesTrainingLatents) {
    const RealMatrix k = stacked_kernel(model);
    const RealMatrix stored = model.w.transpose() * k;
    const RealMatrix recomputed = tca_transform(model, model.landmarks);
    EXPECT_LT((stored - recomputed).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index j : {Eigen::Index{0}, Eigen::Index{77}})
        EXPECT_LT((tca_transform(model, RealVector(model.landmarks.col(j))) - stored.col(j)).norm(), 1e-10);
}

TEST_F(TcaFixture, LatentMmdNotAboveInput) {
    const double input = mmd_distance(src, tar, model.kernel);
    const RealMatrix zs = tca_transform(model, src), zt = tca_transform(model, tar);
    EXPECT_LE(mmd_distance(zs, zt, Kernel::linear()), input);
    EXPECT_LE(mmd_distance(zs, zt, model.kernel), input);
}

TEST(Tca, IdenticalDomainsCollapse) {
    const RealMatrix x = to_columns(sim::build_dataset(gaussian(3), 50));
    TcaOptions opts;
    opts.m = 3;
    const auto model = tca_fit(x, x, opts);
    const RealMatrix z = tca_transform(model, x);
    EXPECT_LT(mmd_distance(z, z, Kernel::linear()), 1e-8);
    EXPECT_LT(mmd_distance(tca_transform(model, RealMatrix(model.landmarks.leftCols(50))),
                           tca_transform(model, RealMatrix(model.landmarks.rightCols(50))), Kernel::linear()),
              1e-8);
}

TEST(Tca, SingleComponentGivesScalar) {
    const RealMatrix x = random_points(4, 20, 1), y = random_points(4, 20, 2, 0.5);
    TcaOptions opts;
    opts.m = 1;
    const auto model = tca_fit(x, y, opts);
    EXPECT_EQ(tca_transform(model, RealVector(x.col(0))).size(), 1);
}

TEST(Tca, RejectsBadOptions) {
    const RealMatrix x = random_points(4, 10, 1), y = random_points(4, 10, 2);
    TcaOptions opts;
    opts.m = 0;
    EXPECT_THROW(tca_fit(x, y, opts), ArgumentError);
    opts.m = 21;
    EXPECT_THROW(tca_fit(x, y, opts), ArgumentError);
    opts = TcaOptions{};
    opts.mu = 0.0;
    EXPECT_THROW(tca_fit(x, y, opts), ArgumentError);
    opts = TcaOptions{};
    opts.max_points = 15;
    EXPECT_THROW(tca_fit(x, y, opts), FitError);
    EXPECT_THROW(tca_fit(x, random_points(5, 10, 3), TcaOptions{}), DimensionError);
}

TEST(Classifier, SeparableToySetIsFit) {
    RealMatrix z(2, 40);
    std::vector<std::uint8_t> labels;
    RngStream rng(4);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (Eigen::Index i = 0; i < 40; ++i) {
        const bool pos = i % 2 == 0;
        z(0, i) = pos ? u(rng) : -u(rng);
        z(1, i) = u(rng) * 5.0;
        labels.push_back(pos);
    }
    const auto c = fit_latent_classifier(z, labels);
    ASSERT_TRUE(c.trained);
    for (Eigen::Index i = 0; i < 40; ++i) {
        const double p = c.probability(z.col(i));
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
        EXPECT_EQ(p > 0.5, labels[static_cast<std::size_t>(i)] == 1);
    }
}

TEST(Classifier, RejectsSingleClassAndUntrainedUse) {
    const RealMatrix z = random_points(2, 10, 1);
    EXPECT_THROW(fit_latent_classifier(z, std::vector<std::uint8_t>(10, 1)), ArgumentError);
    EXPECT_THROW(fit_latent_classifier(z, std::vector<std::uint8_t>(9, 1)), DimensionError);
    LatentClassifier c;
    EXPECT_THROW(c.logit(RealVector::Zero(2)), StateError);
}

TEST(Classifier, ScaledLatentsKeepFixedScoreRoc) {
    // Fixed classifier scores: a monotone transform of the logit keeps the ROC.
    auto src = sim::build_dataset(qpsk(5), 120);
    const auto tar = sim::build_dataset(gaussian(6), 120);
    TcaOptions opts;
    opts.m = 4;
    auto model = tca_fit(to_columns(src), to_columns(tar), opts);
    train_latent_classifier(model, src);
    const auto logits = tca_logits(model, tar);
    std::vector<double> probs;
    for (const auto& x : tar.examples) {
        const double p = tca_sense(model, x);
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
        probs.push_back(p);
    }
    auto [a0, a1] = detect::split_by_label(logits, tar);
    auto [b0, b1] = detect::split_by_label(probs, tar);
    EXPECT_NEAR(detect::roc_auc(detect::roc_from_scores(a0, a1)), detect::roc_auc(detect::roc_from_scores(b0, b1)),
                1e-12);
    EXPECT_EQ(tca_logits(model, tar, 4), logits);
}

TEST(TcaCheckpoint, RoundTrip) {
    auto src = sim::build_dataset(qpsk(7, 8), 30);
    const auto tar = sim::build_dataset(gaussian(8, 8), 30);
    TcaOptions opts;
    opts.m = 3;
    auto model = tca_fit(to_columns(src), to_columns(tar), opts);
    const auto untrained = encode_tca(model);
    EXPECT_EQ(encode_tca(decode_tca(untrained)), untrained);
    train_latent_classifier(model, src);
    const auto bytes = encode_tca(model);
    EXPECT_EQ(bytes.substr(0, 4), "DSTC");
    const auto back = decode_tca(bytes);
    EXPECT_EQ(encode_tca(back), bytes);
    EXPECT_EQ(back.kernel, model.kernel);
    EXPECT_EQ(back.m, 3u);
    EXPECT_TRUE(back.classifier.trained);
    EXPECT_EQ(back.classifier.weights, model.classifier.weights);

    auto linear = model;
    linear.kernel = Kernel::linear();
    EXPECT_EQ(encode_tca(decode_tca(encode_tca(linear))), encode_tca(linear));
}

TEST(TcaCheckpoint, RejectsTrailingAndTruncatedBytes) {
    const RealMatrix x = random_points(4, 10, 1), y = random_points(4, 10, 2);
    TcaOptions opts;
    opts.m = 2;
    const auto bytes = encode_tca(tca_fit(x, y, opts));
    EXPECT_THROW(decode_tca(bytes + "x"), FormatError);
    EXPECT_THROW(decode_tca(bytes.substr(0, bytes.size() - 1)), FormatError);
    EXPECT_THROW(decode_tca(""), FormatError);
}

TEST(FineTune, EmptyDataOrZeroEpochsIsIdentity) {
    const auto base = net::initialize<float>(net::NetworkSpec::standard(16), 3);
    sim::Dataset empty;
    empty.n_samples_per_example = 16;
    auto cfg = FinetunePlan::default_finetune_config();
    EXPECT_EQ(net::encode_weights(fine_tune(base, empty, cfg)), net::encode_weights(base));
    cfg.epochs = 0;
    const auto d = sim::build_dataset(gaussian(2, 16), 20);
    EXPECT_EQ(net::encode_weights(fine_tune(base, d, cfg)), net::encode_weights(base));
    cfg.epochs = 1;
    EXPECT_NE(net::encode_weights(fine_tune(base, d, cfg)), net::encode_weights(base));
}

TEST(FineTune, DefaultsAreSmallStepsAllLayers) {
    const auto cfg = FinetunePlan::default_finetune_config();
    EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-4);
    EXPECT_EQ(cfg.epochs, 20u);
    EXPECT_FALSE(cfg.freeze_conv);
}

TEST(Sweep, ZeroPointEqualsBaseAndIsThreadIndependent) {
    const auto base = net::initialize<float>(net::NetworkSpec::standard(16), 4);
    FinetunePlan plan;
    plan.schedule = {0, 20};
    plan.repetitions = 2;
    plan.test_size = 200;
    plan.finetune_cfg.epochs = 2;
    plan.scratch_cfg.epochs = 2;
    const auto tar = gaussian(9, 16);
    const auto r = run_finetune_sweep(plan, base, tar);
    ASSERT_EQ(r.finetune.size(), 2u);
    ASSERT_EQ(r.cells.size(), 8u);
    // At zero examples both repetitions score the untouched base network.
    EXPECT_EQ(r.finetune[0].std_pd, 0.0);

    sim::ScenarioConfig test_cfg = tar;
    test_cfg.seed = derive_seed(plan.seed, {0x7E57});
    const auto test = sim::build_dataset(test_cfg, plan.test_size);
    std::vector<double> logits;
    for (const auto& s : net::predict_scores(test, base)) logits.push_back(s.logit);
    auto [h0, h1] = detect::split_by_label(logits, test);
    EXPECT_EQ(r.finetune[0].mean_pd, detect::pd_at_pfa(detect::roc_from_scores(h0, h1), plan.pfa));

    plan.threads = 3;
    EXPECT_EQ(sweep_csv_rows(run_finetune_sweep(plan, base, tar)), sweep_csv_rows(r));
}

TEST(Sweep, CellSeedsDependOnlyOnPointAndRep) {
    EXPECT_EQ(cell_seed(1, 100, 2), cell_seed(1, 100, 2));
    EXPECT_NE(cell_seed(1, 100, 2), cell_seed(1, 100, 1));
    EXPECT_NE(cell_seed(1, 100, 2), cell_seed(1, 50, 2));
    EXPECT_NE(cell_seed(1, 100, 2), cell_seed(2, 100, 2));
}

TEST(Sweep, PlanValidation) {
    FinetunePlan plan;
    plan.schedule = {};
    EXPECT_THROW(plan.validate(), ArgumentError);
    plan = FinetunePlan{};
    plan.repetitions = 0;
    EXPECT_THROW(plan.validate(), ArgumentError);
    plan = FinetunePlan{};
    plan.pfa = 1.5;
    EXPECT_THROW(plan.validate(), ArgumentError);
}
