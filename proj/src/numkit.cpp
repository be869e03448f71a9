#include "mesonet/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mesonet/errors.hpp"

namespace mesonet::numkit {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ArgumentError(std::string(what) + ": matrix has non-finite entries");
}

// Bisection on a monotone CDF. Stops at relative bracket width 1e-10 (absolute
// below 1), which is well inside the 1e-8 CDF accuracy the callers need.
template <typename Cdf>
double invert_cdf(Cdf cdf, double p) {
  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000) throw NumericalError("quantile bracket expansion failed", guard);
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-10 * std::max(1.0, hi)) break;
    if (hi - lo <= 1e-300) break;
  }
  // Refine to relative precision for tiny quantiles (heavy left tail).
  if (hi < 1.0) {
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  return 0.5 * (lo + hi);
}

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("probability must lie in (0, 1)");
}

void check_df(double df, const char* name) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw ArgumentError(std::string(name) + " must be positive");
  }
}

}  // namespace

SvdResult svd_thin(const Matrix& m) {
  require_finite(m, "svd_thin");
  if (m.rows() == 0 || m.cols() == 0) throw ArgumentError("svd_thin: empty matrix");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("svd_thin: SVD did not converge", static_cast<long>(m.rows() + m.cols()));
  }
  SvdResult out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index j = 0; j < out.U.cols(); ++j) {
    Index arg = 0;
    out.U.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.U(arg, j) < 0.0) {
      out.U.col(j) *= -1.0;
      out.V.col(j) *= -1.0;
    }
  }
  return out;
}

double rank_tolerance(const Vector& s, Index rows, Index cols) {
  if (s.size() == 0) return 0.0;
  return 1e-10 * s(0) * static_cast<double>(std::max(rows, cols));
}

Index numerical_rank(const Matrix& m) {
  const SvdResult svd = svd_thin(m);
  const double tol = rank_tolerance(svd.S, m.rows(), m.cols());
  Index r = 0;
  for (Index i = 0; i < svd.S.size(); ++i) {
    if (svd.S(i) > tol) ++r;
  }
  return r;
}

Matrix rank_truncate(const Matrix& m, Index d) {
  if (d < 1 || d > std::min(m.rows(), m.cols())) {
    throw ArgumentError("rank_truncate: d must lie in [1, min(rows, cols)]");
  }
  const SvdResult svd = svd_thin(m);
  return svd.U.leftCols(d) * svd.S.head(d).asDiagonal() * svd.V.leftCols(d).transpose();
}

Matrix pinv(const Matrix& m) {
  const SvdResult svd = svd_thin(m);
  const double tol = rank_tolerance(svd.S, m.rows(), m.cols());
  Matrix out = Matrix::Zero(m.cols(), m.rows());
  for (Index i = 0; i < svd.S.size(); ++i) {
    if (svd.S(i) > tol && svd.S(i) > 0.0) {
      out.noalias() += svd.V.col(i) * (1.0 / svd.S(i)) * svd.U.col(i).transpose();
    }
  }
  return out;
}

Matrix orthonormal_basis(const Matrix& m) {
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0) {
    throw ArgumentError("orthonormal_basis: input has no nonzero column");
  }
  const SvdResult svd = svd_thin(m);
  const double tol = rank_tolerance(svd.S, m.rows(), m.cols());
  Index r = 0;
  while (r < svd.S.size() && svd.S(r) > tol) ++r;
  return svd.U.leftCols(r);
}

Matrix haar_stiefel(Index p, Index d, RandomStream& rng) {
  if (d < 1 || d > p) throw ArgumentError("haar_stiefel: need 1 <= d <= p");
  Matrix g(p, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < p; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(p, d);
  const Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  // Fixing sign(diag(R)) > 0 makes Q exactly Haar distributed.
  for (Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix projector(const Matrix& basis) { return basis * basis.transpose(); }

double projector_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ArgumentError("projector_distance: row mismatch");
  const Matrix diff = projector(a) - projector(b);
  if (diff.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double chi2_cdf(double x, double df) {
  check_df(df, "df");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, double df) {
  check_df(df, "df");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chi2_quantile(double df, double p) {
  check_df(df, "df");
  check_probability(p);
  return invert_cdf([df](double x) { return chi2_cdf(x, df); }, p);
}

double f_cdf(double x, double nu1, double nu2) {
  check_df(nu1, "nu1");
  check_df(nu2, "nu2");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double z = nu1 * x / (nu1 * x + nu2);
  return boost::math::ibeta(0.5 * nu1, 0.5 * nu2, z);
}

double f_sf(double x, double nu1, double nu2) {
  check_df(nu1, "nu1");
  check_df(nu2, "nu2");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double z = nu1 * x / (nu1 * x + nu2);
  return boost::math::ibetac(0.5 * nu1, 0.5 * nu2, z);
}

double f_quantile(double nu1, double nu2, double p) {
  check_df(nu1, "nu1");
  check_df(nu2, "nu2");
  check_probability(p);
  return invert_cdf([nu1, nu2](double x) { return f_cdf(x, nu1, nu2); }, p);
}

double noncentral_f_cdf(double x, double nu1, double nu2, double lambda) {
  check_df(nu1, "nu1");
  check_df(nu2, "nu2");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("noncentral_f_cdf: non-centrality must be finite and non-negative");
  }
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double z = nu1 * x / (nu1 * x + nu2);
  if (lambda == 0.0) return boost::math::ibeta(0.5 * nu1, 0.5 * nu2, z);

  const double half = 0.5 * lambda;
  constexpr long kMaxTerms = 100000;
  double total = 0.0;
  double mass = 0.0;
  for (long j = 0; j < kMaxTerms; ++j) {
    const double jd = static_cast<double>(j);
    const double log_w = -half + jd * std::log(half) - std::lgamma(jd + 1.0);
    const double w = std::exp(log_w);
    if (jd > half && w < 1e-14 * mass) break;
    if (w > 0.0) {
      total += w * boost::math::ibeta(0.5 * nu1 + jd, 0.5 * nu2, z);
      mass += w;
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace mesonet::numkit
