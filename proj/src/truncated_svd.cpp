#include "mesonet/truncated_svd.hpp"

#include <algorithm>
#include <cmath>

#include "mesonet/errors.hpp"

namespace mesonet::numkit {

namespace {

Matrix orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

void fix_signs(SvdResult& r) {
  for (Index j = 0; j < r.U.cols(); ++j) {
    Index arg = 0;
    r.U.col(j).cwiseAbs().maxCoeff(&arg);
    if (r.U(arg, j) < 0.0) {
      r.U.col(j) *= -1.0;
      r.V.col(j) *= -1.0;
    }
  }
}

}  // namespace

TruncatedSvd::TruncatedSvd(Index d, double tol, int max_iter)
    : d_(d), tol_(tol), max_iter_(max_iter) {
  if (d < 1) throw ArgumentError("TruncatedSvd: rank must be at least 1");
}

const SvdResult& TruncatedSvd::compute(const Matrix& m) {
  const Index k = std::min(m.rows(), m.cols());
  if (d_ > k) throw ArgumentError("TruncatedSvd: rank exceeds matrix dimensions");
  used_fallback_ = false;
  last_iterations_ = 0;

  const Index block = std::min(k, d_ + 8);
  if (k <= 24 || 3 * d_ >= k) {
    SvdResult full = svd_thin(m);
    result_ = {full.U.leftCols(d_), full.S.head(d_), full.V.leftCols(d_)};
    used_fallback_ = true;
    return result_;
  }

  if (basis_.rows() != m.cols() || basis_.cols() != block) {
    RandomStream init(0x6d65736fULL + static_cast<std::uint64_t>(m.cols()));
    Matrix g(m.cols(), block);
    for (Index j = 0; j < block; ++j) {
      for (Index i = 0; i < m.cols(); ++i) g(i, j) = init.normal();
    }
    basis_ = orthonormalize(g);
  }

  for (int it = 1; it <= max_iter_; ++it) {
    const Matrix q = orthonormalize(m * basis_);
    const Matrix small = q.transpose() * m;  // block x cols
    Eigen::JacobiSVD<Matrix> svd(small, Eigen::ComputeThinU | Eigen::ComputeThinV);
    basis_ = svd.matrixV();
    result_.U = q * svd.matrixU().leftCols(d_);
    result_.S = svd.singularValues().head(d_);
    result_.V = svd.matrixV().leftCols(d_);
    last_iterations_ = it;

    const double scale = result_.S.size() > 0 ? result_.S(0) : 0.0;
    const Matrix resid = m * result_.V - result_.U * result_.S.asDiagonal();
    if (resid.colwise().norm().maxCoeff() <= tol_ * std::max(scale, 1e-300) || scale == 0.0) {
      fix_signs(result_);
      return result_;
    }
  }

  SvdResult full = svd_thin(m);
  result_ = {full.U.leftCols(d_), full.S.head(d_), full.V.leftCols(d_)};
  basis_ = full.V.leftCols(block);
  used_fallback_ = true;
  return result_;
}

Matrix TruncatedSvd::low_rank() const {
  return result_.U * result_.S.asDiagonal() * result_.V.transpose();
}

}  // namespace mesonet::numkit
