#include "deepsense/detectors.hpp"
#include "deepsense/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace deepsense;
using namespace deepsense::detect;
using numerics::RealMatrix;
using numerics::RealVector;

namespace {

sim::ScenarioConfig gaussian(double fraction = 0.25, std::size_t n = 32) {
    sim::ScenarioConfig c;
    c.n_samples = n;
    c.snr_db = {-4.0, -4.0};
    c.bandwidth_fraction = fraction;
    return c;
}

// log N(x; 0, C) by an LDLT solve, independent of the detector's inverses.
double log_density(const RealVector& x, const RealMatrix& c) {
    Eigen::LDLT<RealMatrix> ldlt(c);
    const double quad = x.dot(ldlt.solve(x));
    const double logdet = ldlt.vectorD().array().log().sum();
    return -0.5 * (quad + logdet + static_cast<double>(x.size()) * std::log(2.0 * M_PI));
}

RocCurve curve(std::vector<RocPoint> pts) {
    RocCurve c;
    c.points = std::move(pts);
    c.thresholds.assign(c.points.size(), 0.0);
    return c;
}

double variance(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST(EnergyScore, HandValues) {
    sim::SensingExample x;
    x.iq.assign(8, 0.0f);
    EXPECT_EQ(energy_score(x), 0.0);
    x.iq[1] = 3.0f;
    x.iq[5] = 4.0f;
    EXPECT_EQ(energy_score(x), 25.0);
}

TEST(EnergyScore, NoiseMean) {
    auto cfg = gaussian();
    const auto d = sim::build_dataset(cfg, 100'000, 0.0);
    double s = 0.0;
    for (double e : energy_scores(d)) s += e;
    EXPECT_NEAR(s / 100'000, 32.0, 0.1);
}

TEST(Llr, EqualCovariancesScoreZero) {
    const auto cov = sim::analytic_covariances(gaussian(0.25, 4));
    const LlrDetector det(CovariancePair{cov.c_x, cov.c_x});
    RngStream rng(1);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 20; ++i) {
        RealVector x(8);
        for (auto& v : x) v = normal(rng);
        EXPECT_NEAR(det.score(x), 0.0, 1e-12);
    }
}

TEST(Llr, ScalarHandComputation) {
    RealMatrix cz(1, 1), cx(1, 1);
    cz << 1.0;
    cx << 2.0;
    const LlrDetector det(CovariancePair{cx, cz});
    RealVector x(1);
    x << 2.0;
    EXPECT_DOUBLE_EQ(det.score(x), 1.0);
}

TEST(Llr, MatchesDensityRatioUpToConstant) {
    for (std::size_t n : {2u, 3u, 4u}) {
        const auto cov = sim::analytic_covariances(gaussian(0.25, n));
        const LlrDetector det(cov);
        RngStream rng(10 + n);
        std::normal_distribution<double> normal;
        std::vector<double> diff;
        for (int i = 0; i < 100; ++i) {
            RealVector x(2 * n);
            for (auto& v : x) v = normal(rng);
            diff.push_back(det.score(x) - (log_density(x, cov.c_x) - log_density(x, cov.c_z)));
        }
        EXPECT_LT(variance(diff), 1e-16) << "N = " << n;
    }
}

TEST(Llr, InsensitiveToTinyJitter) {
    const auto cov = sim::analytic_covariances(gaussian());
    const LlrDetector plain(cov);
    const LlrDetector jittered(cov, 1e-12);
    const auto d = sim::build_dataset(gaussian(), 50);
    for (const auto& x : d.examples) {
        const double a = plain.score(x);
        EXPECT_NEAR(jittered.score(x), a, 1e-10 * std::max(1.0, std::abs(a)));
    }
}

TEST(Llr, RocDominatesEnergyDetector) {
    auto cfg = gaussian();
    cfg.seed = 17;
    const auto d = sim::build_dataset(cfg, 200'000);
    const LlrDetector det(sim::analytic_covariances(cfg));
    const auto [l0, l1] = split_by_label(llr_scores(d, det), d);
    const auto [e0, e1] = split_by_label(energy_scores(d), d);
    const auto llr = roc_from_scores(l0, l1);
    const auto ed = roc_from_scores(e0, e1);
    for (double pfa = 0.01; pfa < 1.0; pfa += 0.01) EXPECT_GE(pd_at_pfa(llr, pfa), pd_at_pfa(ed, pfa) - 0.01);
    EXPECT_GT(roc_auc(llr), roc_auc(ed));
}

TEST(Llr, WhiteSignalMatchesEnergyDetector) {
    auto cfg = gaussian(1.0);
    cfg.seed = 23;
    const auto d = sim::build_dataset(cfg, 100'000);
    const LlrDetector det(sim::analytic_covariances(cfg));
    const auto [l0, l1] = split_by_label(llr_scores(d, det), d);
    const auto [e0, e1] = split_by_label(energy_scores(d), d);
    EXPECT_LT(std::abs(roc_auc(roc_from_scores(l0, l1)) - roc_auc(roc_from_scores(e0, e1))), 1e-6);
}

TEST(Llr, EstimatedCovariancesApproachAnalytic) {
    auto cfg = gaussian(0.25, 4);
    const auto d = sim::build_dataset(cfg, 200'000);
    const auto est = estimate_covariance_pair(d);
    const auto exact = sim::analytic_covariances(cfg);
    EXPECT_LT((est.c_x - exact.c_x).norm() / exact.c_x.norm(), 0.02);
    EXPECT_LT((est.c_z - exact.c_z).norm() / exact.c_z.norm(), 0.02);
}

TEST(Roc, PerfectSeparationReachesTopLeft) {
    const std::vector<double> h0{0.0, 1.0}, h1{2.0, 3.0};
    const auto roc = roc_from_scores(h0, h1);
    bool found = false;
    for (std::size_t i = 0; i < roc.points.size(); ++i)
        if (roc.points[i].pfa == 0.0 && roc.points[i].pd == 1.0) {
            found = true;
            EXPECT_EQ(roc.thresholds[i], 1.0);
        }
    EXPECT_TRUE(found);
    EXPECT_DOUBLE_EQ(roc_auc(roc), 1.0);
    EXPECT_EQ(roc.points.back().pfa, 1.0);
    EXPECT_EQ(roc.points.back().pd, 1.0);
    EXPECT_EQ(roc.points.front().pfa, 0.0);
}

TEST(Roc, IdenticalDistributionsGiveDiagonal) {
    std::vector<double> s;
    for (int i = 0; i < 100; ++i) s.push_back(i);
    const auto roc = roc_from_scores(s, s);
    for (const auto& p : roc.points) EXPECT_DOUBLE_EQ(p.pd, p.pfa);
    EXPECT_NEAR(roc_auc(roc), 0.5, 1e-12);
}

TEST(Roc, InvariantUnderMonotoneTransform) {
    RngStream rng(3);
    std::normal_distribution<double> normal;
    std::vector<double> h0, h1, t0, t1;
    for (int i = 0; i < 500; ++i) {
        h0.push_back(normal(rng));
        h1.push_back(normal(rng) + 1.0);
    }
    for (double v : h0) t0.push_back(std::exp(2.0 * v) + 5.0);
    for (double v : h1) t1.push_back(std::exp(2.0 * v) + 5.0);
    const auto a = roc_from_scores(h0, h1);
    const auto b = roc_from_scores(t0, t1);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].pfa, b.points[i].pfa);
        EXPECT_EQ(a.points[i].pd, b.points[i].pd);
    }
}

TEST(Roc, TiesUseStrictThreshold) {
    const std::vector<double> h0{1.0, 1.0}, h1{1.0, 2.0};
    const auto roc = roc_from_scores(h0, h1);
    // Threshold 1.0 detects only the 2.0 score.
    for (std::size_t i = 0; i < roc.points.size(); ++i)
        if (roc.thresholds[i] == 1.0) {
            EXPECT_EQ(roc.points[i].pfa, 0.0);
            EXPECT_EQ(roc.points[i].pd, 0.5);
        }
}

TEST(Roc, EmptyClassRejected) {
    const std::vector<double> some{1.0}, none;
    EXPECT_THROW(roc_from_scores(none, some), ArgumentError);
    EXPECT_THROW(roc_from_scores(some, none), ArgumentError);
}

TEST(PdAtPfa, Diagonal) {
    EXPECT_DOUBLE_EQ(pd_at_pfa(curve({{0, 0}, {1, 1}}), 0.3), 0.3);
}

TEST(PdAtPfa, Perfect) {
    const auto c = curve({{0, 1}, {1, 1}});
    for (double p : {0.0, 0.1, 0.5, 1.0}) EXPECT_EQ(pd_at_pfa(c, p), 1.0);
}

TEST(PdAtPfa, Interpolates) {
    EXPECT_NEAR(pd_at_pfa(curve({{0, 0}, {0.2, 0.8}, {1, 1}}), 0.1), 0.4, 1e-15);
}

TEST(PdAtPfa, VerticalSegmentTakesHighestPd) {
    const auto c = curve({{0, 0}, {0, 0.6}, {0.5, 0.9}, {1, 1}});
    EXPECT_DOUBLE_EQ(pd_at_pfa(c, 0.0), 0.6);
    EXPECT_NEAR(pd_at_pfa(c, 0.25), 0.75, 1e-15);
}

TEST(PdAtPfa, MonotoneInPfa) {
    RngStream rng(8);
    std::normal_distribution<double> normal;
    std::vector<double> h0, h1;
    for (int i = 0; i < 300; ++i) {
        h0.push_back(normal(rng));
        h1.push_back(normal(rng) + 0.7);
    }
    const auto roc = roc_from_scores(h0, h1);
    double prev = -1.0;
    for (int k = 0; k <= 1000; ++k) {
        const double pd = pd_at_pfa(roc, k / 1000.0);
        EXPECT_GE(pd, prev);
        prev = pd;
    }
}

TEST(PdAtPfa, EmptyCurveRejected) {
    EXPECT_THROW(pd_at_pfa(RocCurve{}, 0.1), ArgumentError);
}
