#include "deepsense/detectors.hpp"

#include "deepsense/errors.hpp"

#include <algorithm>
#include <limits>

namespace deepsense::detect {

double energy_score(const SensingExample& x) {
    double e = 0.0;
    for (float v : x.iq) e += static_cast<double>(v) * static_cast<double>(v);
    return e;
}

LlrDetector::LlrDetector(const CovariancePair& cov, double jitter) {
    if (cov.c_x.rows() != cov.c_z.rows() || cov.c_x.cols() != cov.c_z.cols())
        throw DimensionError("LlrDetector: C_x and C_z differ in size");
    form_ = numerics::invert_spd(cov.c_z, jitter) - numerics::invert_spd(cov.c_x, jitter);
}

double LlrDetector::score(const numerics::RealVector& flat) const {
    if (flat.size() != form_.rows())
        throw DimensionError("LlrDetector: interval has " + std::to_string(flat.size()) + " reals, covariance is " +
                             std::to_string(form_.rows()));
    return 0.5 * flat.dot(form_ * flat);
}

double LlrDetector::score(const SensingExample& x) const { return score(sim::flatten(x)); }

CovariancePair estimate_covariance_pair(const Dataset& labeled) {
    const auto dim = 2 * labeled.n_samples_per_example;
    numerics::CovarianceAccumulator pos(dim), neg(dim);
    for (const auto& ex : labeled.examples) (ex.label ? pos : neg).add(sim::flatten(ex));
    if (pos.count() < 2 || neg.count() < 2)
        throw DimensionError("estimate_covariance_pair: need at least 2 examples of each label");
    return CovariancePair{pos.covariance(), neg.covariance()};
}

RocCurve roc_from_scores(std::span<const double> scores_h0, std::span<const double> scores_h1) {
    if (scores_h0.empty() || scores_h1.empty()) throw ArgumentError("roc_from_scores: both score lists must be nonempty");
    std::vector<double> h0(scores_h0.begin(), scores_h0.end());
    std::vector<double> h1(scores_h1.begin(), scores_h1.end());
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());
    std::vector<double> all;
    all.reserve(h0.size() + h1.size());
    std::merge(h0.begin(), h0.end(), h1.begin(), h1.end(), std::back_inserter(all));
    all.erase(std::unique(all.begin(), all.end()), all.end());

    const auto n0 = static_cast<double>(h0.size());
    const auto n1 = static_cast<double>(h1.size());
    RocCurve curve;
    curve.points.reserve(all.size() + 1);
    curve.thresholds.reserve(all.size() + 1);
    // Descending thresholds give ascending (pfa, pd). Counts of scores > t
    // come from upper_bound on the sorted lists.
    auto above = [](const std::vector<double>& v, double t) {
        return static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), t));
    };
    for (auto it = all.rbegin(); it != all.rend(); ++it) {
        curve.thresholds.push_back(*it);
        curve.points.push_back({above(h0, *it) / n0, above(h1, *it) / n1});
    }
    curve.thresholds.push_back(-std::numeric_limits<double>::infinity());
    curve.points.push_back({1.0, 1.0});
    return curve;
}

double roc_auc(const RocCurve& curve) {
    double area = 0.0;
    double prev_pfa = 0.0, prev_pd = 0.0;
    for (const auto& p : curve.points) {
        area += (p.pfa - prev_pfa) * 0.5 * (p.pd + prev_pd);
        prev_pfa = p.pfa;
        prev_pd = p.pd;
    }
    return area;
}

double pd_at_pfa(const RocCurve& curve, double pfa_star) {
    const auto& pts = curve.points;
    if (pts.empty()) throw ArgumentError("pd_at_pfa: empty curve");
    if (pfa_star <= pts.front().pfa) {
        double pd = pts.front().pd;
        for (const auto& p : pts)
            if (p.pfa == pts.front().pfa) pd = std::max(pd, p.pd);
        return pd;
    }
    if (pfa_star >= pts.back().pfa) return pts.back().pd;
    // First point strictly beyond the target; its predecessor is the highest
    // point at or below it.
    const auto hi = std::upper_bound(pts.begin(), pts.end(), pfa_star,
                                     [](double v, const RocPoint& p) { return v < p.pfa; });
    const auto& b = *hi;
    const auto& a = *(hi - 1);
    if (a.pfa == pfa_star) return a.pd;
    const double t = (pfa_star - a.pfa) / (b.pfa - a.pfa);
    return a.pd + t * (b.pd - a.pd);
}

std::pair<std::vector<double>, std::vector<double>> split_by_label(std::span<const double> scores, const Dataset& d) {
    if (scores.size() != d.size()) throw DimensionError("split_by_label: score count does not match dataset size");
    std::pair<std::vector<double>, std::vector<double>> out;
    for (std::size_t i = 0; i < scores.size(); ++i) (d.examples[i].label ? out.second : out.first).push_back(scores[i]);
    return out;
}

std::vector<double> energy_scores(const Dataset& d) {
    std::vector<double> s;
    s.reserve(d.size());
    for (const auto& ex : d.examples) s.push_back(energy_score(ex));
    return s;
}

std::vector<double> llr_scores(const Dataset& d, const LlrDetector& det) {
    std::vector<double> s;
    s.reserve(d.size());
    for (const auto& ex : d.examples) s.push_back(det.score(ex));
    return s;
}

}  // namespace deepsense::detect
