#pragma once

#include "mesonet/numkit.hpp"

namespace mesonet::numkit {

/// Leading-`d` SVD by block subspace iteration, warm-started from the
/// previous call's right subspace. Intended for loops that repeatedly
/// truncate slowly changing matrices (hard imputation, ADMM, bootstrap).
/// Falls back to `svd_thin` when `d` is a large fraction of the dimension or
/// iteration stalls.
class TruncatedSvd {
 public:
  explicit TruncatedSvd(Index d, double tol = 1e-10, int max_iter = 300);

  /// Leading-d factors of `m`; U is rows x d, V is cols x d.
  const SvdResult& compute(const Matrix& m);

  /// U diag(S) V^T of the most recent `compute`.
  Matrix low_rank() const;

  Index rank() const { return d_; }
  int last_iterations() const { return last_iterations_; }
  bool used_fallback() const { return used_fallback_; }

 private:
  Index d_;
  double tol_;
  int max_iter_;
  Matrix basis_;  // cols x block right subspace carried between calls
  SvdResult result_;
  int last_iterations_ = 0;
  bool used_fallback_ = false;
};

}  // namespace mesonet::numkit
