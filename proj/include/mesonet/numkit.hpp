#pragma once

#include <Eigen/Dense>

#include "mesonet/rng.hpp"

/// Dense linear algebra and distribution functions shared by every module.
///
/// All matrices are column-major `Eigen::MatrixXd`, so `vec` is the natural
/// storage order and `vec(X M Y^T) = (Y kron X) vec(M)` holds for `kron`.
namespace mesonet::numkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct SvdResult {
  Matrix U;  // rows x k, orthonormal columns
  Vector S;  // k non-increasing, non-negative
  Matrix V;  // cols x k, orthonormal columns
};

/// Thin SVD with k = min(rows, cols). Each left singular vector is signed so
/// its largest-magnitude entry is positive (the matching right vector follows).
SvdResult svd_thin(const Matrix& m);

/// Best rank-`d` approximation in Frobenius norm.
Matrix rank_truncate(const Matrix& m, Index d);

/// Threshold below which singular values count as zero:
/// 1e-10 * s_max * max(rows, cols).
double rank_tolerance(const Vector& singular_values, Index rows, Index cols);

Index numerical_rank(const Matrix& m);

Matrix pinv(const Matrix& m);

/// Orthonormal basis for col(m); column count equals the numerical rank.
Matrix orthonormal_basis(const Matrix& m);

/// Haar-distributed p x d matrix with orthonormal columns.
Matrix haar_stiefel(Index p, Index d, RandomStream& rng);

Matrix kron(const Matrix& a, const Matrix& b);

/// Projector onto col(basis); basis must have orthonormal columns.
Matrix projector(const Matrix& basis);

/// Spectral-norm distance between the projectors onto col(a) and col(b).
double projector_distance(const Matrix& a, const Matrix& b);

double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);
double chi2_quantile(double df, double p);

double f_cdf(double x, double nu1, double nu2);
double f_sf(double x, double nu1, double nu2);
double f_quantile(double nu1, double nu2, double p);

/// CDF of the non-central F(nu1, nu2; lambda) as a Poisson mixture of
/// regularized incomplete beta functions. Terms are accumulated until past
/// the Poisson mode and the next weight falls below 1e-14 of the mass so far
/// (hard cap 1e5 terms).
double noncentral_f_cdf(double x, double nu1, double nu2, double lambda);

}  // namespace mesonet::numkit
