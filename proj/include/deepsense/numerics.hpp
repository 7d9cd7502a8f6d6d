#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace deepsense::numerics {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Eigenpairs sorted by descending eigenvalue, one column of `vectors` per value.
struct EigenPairs {
    RealVector values;
    RealMatrix vectors;
};

/// Maximum-likelihood covariance (1/n normalization) of the given samples.
/// The result is symmetrized exactly.
RealMatrix estimate_covariance(const std::vector<std::vector<double>>& samples);

/// Same, with samples stored as the columns of a d x n matrix.
RealMatrix estimate_covariance(const RealMatrix& samples_as_columns);

/// Streaming version of estimate_covariance for Monte-Carlo sized inputs.
class CovarianceAccumulator {
public:
    explicit CovarianceAccumulator(std::size_t dim);

    void add(const RealVector& sample);
    /// Adds every column of a d x k block.
    void add_columns(const RealMatrix& block);

    std::size_t count() const noexcept { return count_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(sum_.size()); }
    RealVector mean() const;
    RealMatrix covariance() const;

private:
    std::size_t count_ = 0;
    RealVector sum_;
    RealMatrix outer_;
};

/// 1e-8 * trace(M) / dim, the jitter used for kernel-sized matrices.
double default_jitter(const RealMatrix& m);

/// Returns (M + jitter*I)^-1 via Cholesky. Throws SingularMatrixError naming
/// the first non-positive pivot.
RealMatrix invert_spd(const RealMatrix& m, double jitter = 0.0);

/// Lower Cholesky factor of (M + jitter*I); same error contract as invert_spd.
RealMatrix cholesky_lower(const RealMatrix& m, double jitter = 0.0);

/// All eigenpairs of a symmetric matrix, descending.
EigenPairs symmetric_eigen(const RealMatrix& m);

/// Top-m eigenpairs of B^-1 A for symmetric PSD A and symmetric PD B.
/// Solved as a symmetric problem after whitening by the Cholesky factor of B,
/// so returned vectors are B-orthonormal (V^T B V = I).
EigenPairs leading_eigenvectors_of_pencil(const RealMatrix& a, const RealMatrix& b, std::size_t m,
                                          double jitter = 0.0);

/// Covariance of the stacked (I; Q) real vector for a circularly-symmetric
/// complex vector with covariance C: 0.5 * [[Re C, -Im C], [Im C, Re C]].
RealMatrix complex_to_real_composite(const ComplexMatrix& c);

/// Largest |M - M^T| entry.
double asymmetry(const RealMatrix& m);

}  // namespace deepsense::numerics
