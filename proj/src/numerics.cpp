#include "deepsense/numerics.hpp"

#include "deepsense/errors.hpp"

#include <cmath>
#include <string>

namespace deepsense::numerics {

namespace {

constexpr double kSymmetryTolerance = 1e-10;

void require_square(const RealMatrix& m, const char* what) {
    if (m.rows() != m.cols())
        throw DimensionError(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected square");
}

void require_symmetric(const RealMatrix& m, const char* what) {
    require_square(m, what);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (asymmetry(m) > kSymmetryTolerance * scale)
        throw ArgumentError(std::string(what) + ": matrix is not symmetric");
}

// Unblocked Cholesky used only to locate the failing pivot after Eigen's
// factorization reports a failure.
std::size_t find_failing_pivot(const RealMatrix& a, double& pivot_value) {
    const Eigen::Index n = a.rows();
    RealMatrix l = RealMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0)) {
            pivot_value = d;
            return static_cast<std::size_t>(j);
        }
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i)
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    pivot_value = 0.0;
    return static_cast<std::size_t>(n > 0 ? n - 1 : 0);
}

Eigen::LLT<RealMatrix> factorize(const RealMatrix& m, double jitter, const char* what) {
    require_symmetric(m, what);
    if (jitter < 0.0) throw ArgumentError(std::string(what) + ": jitter must be >= 0");
    RealMatrix shifted = m;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<RealMatrix> llt(shifted);
    if (llt.info() != Eigen::Success) {
        double value = 0.0;
        const std::size_t pivot = find_failing_pivot(shifted, value);
        throw SingularMatrixError(pivot, value);
    }
    return llt;
}

}  // namespace

double asymmetry(const RealMatrix& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    if (m.size() == 0) return 0.0;
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

RealMatrix estimate_covariance(const std::vector<std::vector<double>>& samples) {
    if (samples.size() < 2) throw DimensionError("estimate_covariance: need at least 2 samples");
    const std::size_t d = samples.front().size();
    RealMatrix cols(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t j = 0; j < samples.size(); ++j) {
        if (samples[j].size() != d)
            throw DimensionError("estimate_covariance: sample " + std::to_string(j) + " has length " +
                                 std::to_string(samples[j].size()) + ", expected " + std::to_string(d));
        for (std::size_t i = 0; i < d; ++i) cols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[j][i];
    }
    return estimate_covariance(cols);
}

RealMatrix estimate_covariance(const RealMatrix& samples_as_columns) {
    if (samples_as_columns.cols() < 2) throw DimensionError("estimate_covariance: need at least 2 samples");
    const RealVector mean = samples_as_columns.rowwise().mean();
    const RealMatrix centered = samples_as_columns.colwise() - mean;
    RealMatrix cov = (centered * centered.transpose()) / static_cast<double>(samples_as_columns.cols());
    return 0.5 * (cov + cov.transpose());
}

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim)
    : sum_(RealVector::Zero(static_cast<Eigen::Index>(dim))),
      outer_(RealMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

void CovarianceAccumulator::add(const RealVector& sample) {
    if (sample.size() != sum_.size()) throw DimensionError("CovarianceAccumulator: sample length mismatch");
    sum_ += sample;
    outer_.selfadjointView<Eigen::Lower>().rankUpdate(sample);
    ++count_;
}

void CovarianceAccumulator::add_columns(const RealMatrix& block) {
    if (block.rows() != sum_.size()) throw DimensionError("CovarianceAccumulator: block row count mismatch");
    sum_ += block.rowwise().sum();
    outer_.selfadjointView<Eigen::Lower>().rankUpdate(block);
    count_ += static_cast<std::size_t>(block.cols());
}

RealVector CovarianceAccumulator::mean() const {
    if (count_ == 0) throw DimensionError("CovarianceAccumulator: no samples");
    return sum_ / static_cast<double>(count_);
}

RealMatrix CovarianceAccumulator::covariance() const {
    if (count_ < 2) throw DimensionError("CovarianceAccumulator: need at least 2 samples");
    const RealVector mu = mean();
    RealMatrix full = outer_.selfadjointView<Eigen::Lower>();
    RealMatrix cov = full / static_cast<double>(count_) - mu * mu.transpose();
    return 0.5 * (cov + cov.transpose());
}

double default_jitter(const RealMatrix& m) {
    if (m.rows() == 0) return 0.0;
    return 1e-8 * m.trace() / static_cast<double>(m.rows());
}

RealMatrix cholesky_lower(const RealMatrix& m, double jitter) {
    return factorize(m, jitter, "cholesky_lower").matrixL();
}

RealMatrix invert_spd(const RealMatrix& m, double jitter) {
    const auto llt = factorize(m, jitter, "invert_spd");
    RealMatrix inv = llt.solve(RealMatrix::Identity(m.rows(), m.cols()));
    return 0.5 * (inv + inv.transpose());
}

EigenPairs symmetric_eigen(const RealMatrix& m) {
    require_symmetric(m, "symmetric_eigen");
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(m);
    if (solver.info() != Eigen::Success) throw ArgumentError("symmetric_eigen: solver did not converge");
    EigenPairs out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

EigenPairs leading_eigenvectors_of_pencil(const RealMatrix& a, const RealMatrix& b, std::size_t m, double jitter) {
    require_symmetric(a, "leading_eigenvectors_of_pencil (A)");
    require_symmetric(b, "leading_eigenvectors_of_pencil (B)");
    if (a.rows() != b.rows()) throw DimensionError("leading_eigenvectors_of_pencil: A and B differ in size");
    const auto dim = static_cast<std::size_t>(a.rows());
    if (m == 0 || m > dim)
        throw ArgumentError("leading_eigenvectors_of_pencil: m = " + std::to_string(m) + " exceeds dimension " +
                            std::to_string(dim));

    const auto llt = factorize(b, jitter, "leading_eigenvectors_of_pencil (B)");
    const auto lower = llt.matrixL();
    // C = L^-1 A L^-T, symmetric with the same spectrum as B^-1 A.
    RealMatrix left = lower.solve(a);
    RealMatrix whitened = lower.solve(left.transpose());
    whitened = 0.5 * (whitened + whitened.transpose());

    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(whitened);
    if (solver.info() != Eigen::Success) throw ArgumentError("leading_eigenvectors_of_pencil: solver did not converge");

    const auto k = static_cast<Eigen::Index>(m);
    EigenPairs out;
    out.values = solver.eigenvalues().tail(k).reverse();
    RealMatrix u = solver.eigenvectors().rightCols(k).rowwise().reverse();
    out.vectors = llt.matrixU().solve(u);
    return out;
}

RealMatrix complex_to_real_composite(const ComplexMatrix& c) {
    if (c.rows() != c.cols()) throw DimensionError("complex_to_real_composite: matrix is not square");
    if (c.size() > 0 && (c - c.adjoint()).cwiseAbs().maxCoeff() > kSymmetryTolerance)
        throw ArgumentError("complex_to_real_composite: matrix is not Hermitian");
    const Eigen::Index n = c.rows();
    RealMatrix out(2 * n, 2 * n);
    const RealMatrix re = c.real();
    const RealMatrix im = c.imag();
    out.topLeftCorner(n, n) = 0.5 * re;
    out.topRightCorner(n, n) = -0.5 * im;
    out.bottomLeftCorner(n, n) = 0.5 * im;
    out.bottomRightCorner(n, n) = 0.5 * re;
    return out;
}

}  // namespace deepsense::numerics
