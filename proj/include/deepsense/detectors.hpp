#pragma once

#include "deepsense/numerics.hpp"
#include "deepsense/signal_sim.hpp"

#include <span>
#include <utility>
#include <vector>

namespace deepsense::detect {

using sim::CovariancePair;
using sim::Dataset;
using sim::SensingExample;

/// Total received energy: sum of I^2 + Q^2 over the interval.
double energy_score(const SensingExample& x);

/// Quadratic log-likelihood-ratio detector for a zero-mean Gaussian signal in
/// Gaussian noise: 0.5 * x^T (C_z^-1 - C_x^-1) x. Both inverses are computed
/// at construction; scoring is const and thread-safe.
class LlrDetector {
public:
    explicit LlrDetector(const CovariancePair& cov, double jitter = 0.0);

    double score(const SensingExample& x) const;
    double score(const numerics::RealVector& flat) const;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(form_.rows()); }
    const numerics::RealMatrix& quadratic_form() const noexcept { return form_; }

private:
    numerics::RealMatrix form_;  // C_z^-1 - C_x^-1
};

/// Sample covariances of the label-1 (C_x) and label-0 (C_z) examples.
CovariancePair estimate_covariance_pair(const Dataset& labeled);

struct RocPoint {
    double pfa = 0.0;
    double pd = 0.0;
};

/// Empirical ROC. points[i] is produced by declaring "present" when
/// score > thresholds[i]. Sorted by pfa ascending; the last threshold is
/// -infinity, giving (1, 1).
struct RocCurve {
    std::vector<RocPoint> points;
    std::vector<double> thresholds;
};

RocCurve roc_from_scores(std::span<const double> scores_h0, std::span<const double> scores_h1);

/// Trapezoidal area under the curve in (pfa, pd).
double roc_auc(const RocCurve& curve);

/// pd at a target false-alarm rate, linearly interpolated between the
/// bracketing curve points. Where several points share a pfa the highest pd
/// counts; targets outside the curve clamp to its endpoints.
double pd_at_pfa(const RocCurve& curve, double pfa_star);

/// Splits per-example scores by label: first = label 0, second = label 1.
std::pair<std::vector<double>, std::vector<double>> split_by_label(std::span<const double> scores,
                                                                   const Dataset& d);

std::vector<double> energy_scores(const Dataset& d);
std::vector<double> llr_scores(const Dataset& d, const LlrDetector& det);

}  // namespace deepsense::detect
