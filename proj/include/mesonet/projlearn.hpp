#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mesonet/netmodel.hpp"

/// Stage I: projections learned only from node pairs outside the hypothesis set.
namespace mesonet {

/// Rows/columns of a rectangle S and their complements. With S = rows x cols,
/// C = rows x rest_cols, R = rest_rows x cols and D = rest_rows x rest_cols.
struct BlockPartition {
  std::vector<Index> rows;
  std::vector<Index> cols;
  std::vector<Index> rest_rows;
  std::vector<Index> rest_cols;

  static BlockPartition from(const HypothesisSet& s, Index n);
};

/// Read-only access to layer means that refuses to return any S entry.
/// Every learning routine goes through one of these; `reads()` counts
/// element reads for auditing.
class HeldOutView {
 public:
  HeldOutView(const TwoSampleData& data, const HypothesisSet& s);

  Index nodes() const { return n_; }
  Index layers() const { return m_; }
  bool held_out(Index i, Index j) const { return !mask_(i, j); }
  const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask() const { return mask_; }

  /// Mean over layers of sample g at (i, j); throws HeldOutViolation on S.
  double mean(int g, Index i, Index j) const;
  /// Sub-block of layer means; throws HeldOutViolation if it touches S.
  Matrix block(int g, const std::vector<Index>& rows, const std::vector<Index>& cols) const;
  /// Full n x n layer mean with S entries replaced by `fill`.
  Matrix masked_mean(int g, double fill = 0.0) const;

  long reads() const { return reads_; }

 private:
  Index n_;
  Index m_;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask_;
  Matrix mean1_;
  Matrix mean2_;
  mutable long reads_ = 0;
};

struct BlockDifferences {
  Matrix C;  // r x (n - c)
  Matrix R;  // (n - r) x c
  Matrix D;  // (n - r) x (n - c)
};

BlockDifferences block_means(const TwoSampleData& data, const BlockPartition& part);
BlockDifferences block_means(const HeldOutView& view, const BlockPartition& part);

/// C ([D]_(d*))^+ R. Throws DegenerateSignalError if [D]_(d*) vanishes.
Matrix one_step_T(const BlockDifferences& blocks, Index d_star);

struct ImputeResult {
  Matrix completed;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective;  // observed-entry residual per iteration
};

/// Rank-d alternating imputation: missing entries start at 0, then
/// alternate rank-d truncation with restoring observed entries until the
/// relative change drops below tol.
ImputeResult hard_impute(const Matrix& m,
                         const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& observed,
                         Index d, int max_iter = 500, double tol = 1e-7);

enum class TrimBound { third, unit };
TrimBound parse_trim_bound(const std::string& s);

/// Elementwise logit of mean adjacencies, clamped to [1/(3m), 1 - 1/(3m)]
/// (third) or [1/m, 1 - 1/m] (unit) before the transform.
Matrix logit_transform_trim(const Matrix& mean_adjacency, Index m, TrimBound bound = TrimBound::third);

struct LearnOptions {
  std::optional<Index> d_star;  // D-block truncation rank; defaults to d
  TrimBound trim = TrimBound::third;
  bool center = false;          // impute only: subtract the observed mean first
  int impute_max_iter = 500;
  double impute_tol = 1e-7;
  // Binary rect learning: iterations of the per-group rank-d* fill of the
  // trimmed logits. A handful suffice since only the off-S blocks are used.
  int link_max_iter = 30;
};

/// Leading-d singular subspaces of the one-step estimate. Pads from the
/// remaining singular vectors (and flags it) when d exceeds the rank.
ProjectionPair learn_projections_rect(const TwoSampleData& data, const HypothesisSet& s, Index d,
                                      const LearnOptions& opt = {});

/// Subspaces of a rank-d imputation of the mean difference with S missing.
ProjectionPair learn_projections_impute(const TwoSampleData& data, const HypothesisSet& s, Index d,
                                        const LearnOptions& opt = {});

/// Projects out 1_c kron 1_r.
ProjectionPair density_correct(const ProjectionPair& p);
/// Projects out additive row and column effects (r + c - 1 directions).
/// The one-argument form needs a Kronecker pair; general bases need the set.
ProjectionPair degree_correct(const ProjectionPair& p);
ProjectionPair degree_correct(const ProjectionPair& p, const HypothesisSet& s);

/// Single row (r = 1) or column (c = 1) hypothesis: trivial projection on the
/// unit side and the leading d* subspace of the held-out block on the other.
ProjectionPair row_hypothesis_projection(const TwoSampleData& data, const HypothesisSet& s,
                                         Index d_star);

struct SpectralDiag {
  Vector singular_values;
  std::optional<Index> suggested_d;  // largest relative gap; advisory only
  std::optional<double> rho_u, kappa_u, rho_v, kappa_v;
};

/// Spectrum of the held-out difference: the D block for rectangles, the
/// zero-filled masked difference otherwise.
SpectralDiag spectral_diagnostics(const TwoSampleData& data, const HypothesisSet& s);

/// Block-orthonormality diagnostics of the true difference's singular vectors,
/// for simulations where the parameters are known.
void fill_oracle_diagnostics(SpectralDiag& diag, const Matrix& theta_diff, const BlockPartition& part,
                             Index d);

/// Largest relative-gap index in a non-increasing spectrum.
std::optional<Index> elbow(const Vector& s, Index max_d = 0);

}  // namespace mesonet
