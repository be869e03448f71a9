#include "mesonet/projlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mesonet/errors.hpp"
#include "mesonet/truncated_svd.hpp"

namespace mesonet {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

namespace {

std::vector<Index> complement(const std::vector<Index>& idx, Index n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index i : idx) in[static_cast<std::size_t>(i)] = true;
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i) {
    if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Matrix take_block(const Matrix& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

// Leading-d singular vectors of m; flags padding when d exceeds the numerical rank.
struct Leading {
  Matrix u;
  Matrix v;
  bool padded = false;
};

Leading leading_subspaces(const Matrix& m, Index d) {
  if (d > std::min(m.rows(), m.cols())) {
    throw ArgumentError("requested dimension " + std::to_string(d) +
                        " exceeds the hypothesis block size");
  }
  const numkit::SvdResult svd = numkit::svd_thin(m);
  if (svd.S(0) == 0.0) throw DegenerateSignalError("learned difference is identically zero");
  const double tol = numkit::rank_tolerance(svd.S, m.rows(), m.cols());
  Index rank = 0;
  while (rank < svd.S.size() && svd.S(rank) > tol) ++rank;
  return {svd.U.leftCols(d), svd.V.leftCols(d), d > rank};
}

void check_dim(Index d) {
  if (d < 1) throw ArgumentError("projection dimension d must be at least 1");
}

}  // namespace

BlockPartition BlockPartition::from(const HypothesisSet& s, Index n) {
  if (!s.is_rectangle()) throw ArgumentError("block partition needs a rectangular hypothesis set");
  s.validate(n);
  BlockPartition p;
  p.rows = s.rows();
  p.cols = s.cols();
  p.rest_rows = complement(p.rows, n);
  p.rest_cols = complement(p.cols, n);
  if (p.rest_rows.empty() || p.rest_cols.empty()) {
    throw ArgumentError("hypothesis rectangle leaves no held-out rows or columns");
  }
  return p;
}

HeldOutView::HeldOutView(const TwoSampleData& data, const HypothesisSet& s)
    : n_(data.nodes()), m_(data.layers()), mask_(s.mask(data.nodes())) {
  mean1_ = Matrix::Constant(n_, n_, std::numeric_limits<double>::quiet_NaN());
  mean2_ = mean1_;
  const double inv_m = 1.0 / static_cast<double>(m_);
  for (Index j = 0; j < n_; ++j) {
    for (Index i = 0; i < n_; ++i) {
      if (mask_(i, j)) continue;
      double a = 0.0, b = 0.0;
      for (Index k = 0; k < m_; ++k) {
        a += data.sample1().layer(k)(i, j);
        b += data.sample2().layer(k)(i, j);
      }
      mean1_(i, j) = a * inv_m;
      mean2_(i, j) = b * inv_m;
    }
  }
}

double HeldOutView::mean(int g, Index i, Index j) const {
  if (mask_(i, j)) {
    throw HeldOutViolation("read of hypothesis-set edge (" + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ") during projection learning");
  }
  ++reads_;
  return g == 1 ? mean1_(i, j) : mean2_(i, j);
}

Matrix HeldOutView::block(int g, const std::vector<Index>& rows, const std::vector<Index>& cols) const {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = mean(g, rows[i], cols[j]);
    }
  }
  return out;
}

Matrix HeldOutView::masked_mean(int g, double fill) const {
  Matrix out(n_, n_);
  for (Index j = 0; j < n_; ++j) {
    for (Index i = 0; i < n_; ++i) out(i, j) = mask_(i, j) ? fill : mean(g, i, j);
  }
  return out;
}

BlockDifferences block_means(const HeldOutView& view, const BlockPartition& part) {
  BlockDifferences b;
  b.C = view.block(1, part.rows, part.rest_cols) - view.block(2, part.rows, part.rest_cols);
  b.R = view.block(1, part.rest_rows, part.cols) - view.block(2, part.rest_rows, part.cols);
  b.D = view.block(1, part.rest_rows, part.rest_cols) - view.block(2, part.rest_rows, part.rest_cols);
  return b;
}

BlockDifferences block_means(const TwoSampleData& data, const BlockPartition& part) {
  if (part.rows.empty() || part.cols.empty() || part.rest_rows.empty() || part.rest_cols.empty()) {
    throw ArgumentError("block partition has an empty block");
  }
  const auto pairs = [&] {
    std::vector<NodePair> out;
    for (Index c : part.cols) {
      for (Index r : part.rows) out.push_back({r, c});
    }
    return out;
  }();
  const HeldOutView view(data, HypothesisSet::from_pairs(pairs));
  return block_means(view, part);
}

Matrix one_step_T(const BlockDifferences& blocks, Index d_star) {
  if (d_star < 1) throw ArgumentError("one_step_T: d_star must be at least 1");
  const Matrix& d = blocks.D;
  if (blocks.C.cols() != d.cols() || blocks.R.rows() != d.rows()) {
    throw ArgumentError("one_step_T: block shapes do not conform");
  }
  if (d_star > std::min(d.rows(), d.cols())) {
    throw ArgumentError("one_step_T: d_star exceeds the held-out block size");
  }
  const numkit::SvdResult svd = numkit::svd_thin(d);
  if (!(svd.S(0) > 0.0)) throw DegenerateSignalError("one_step_T: held-out D block is zero");
  const double tol = numkit::rank_tolerance(svd.S, d.rows(), d.cols());
  // Pseudo-inverse of the rank-d* truncation straight from the SVD.
  Matrix left = Matrix::Zero(blocks.C.rows(), d_star);
  Matrix right = Matrix::Zero(d_star, blocks.R.cols());
  for (Index k = 0; k < d_star; ++k) {
    if (svd.S(k) <= tol) break;
    left.col(k) = blocks.C * svd.V.col(k) / svd.S(k);
    right.row(k) = svd.U.col(k).transpose() * blocks.R;
  }
  return left * right;
}

ImputeResult hard_impute(const Matrix& m, const BoolMatrix& observed, Index d, int max_iter,
                         double tol) {
  if (m.rows() != observed.rows() || m.cols() != observed.cols()) {
    throw ArgumentError("hard_impute: mask shape does not match the matrix");
  }
  if (d < 1 || d > std::min(m.rows(), m.cols())) {
    throw ArgumentError("hard_impute: d must lie in [1, min(rows, cols)]");
  }
  if (max_iter < 1) throw ArgumentError("hard_impute: max_iter must be positive");
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (observed(i, j) && !std::isfinite(m(i, j))) {
        throw ArgumentError("hard_impute: observed entry is not finite");
      }
    }
  }
  if (observed.count() == 0) throw ArgumentError("hard_impute: no observed entries");

  Matrix z = observed.select(m, Matrix::Zero(m.rows(), m.cols()));
  numkit::TruncatedSvd tsvd(d);
  ImputeResult out;
  for (int it = 1; it <= max_iter; ++it) {
    tsvd.compute(z);
    Matrix low = tsvd.low_rank();
    const Matrix next = observed.select(m, low);
    const Matrix resid = m - low;
    out.objective.push_back(observed.select(resid, Matrix::Zero(m.rows(), m.cols())).squaredNorm());
    const double change = (next - z).norm();
    const double scale = std::max(z.norm(), 1e-300);
    out.completed = std::move(low);
    out.iterations = it;
    z = next;
    if (change <= tol * scale || change == 0.0) {
      out.converged = true;
      break;
    }
  }
  return out;
}

TrimBound parse_trim_bound(const std::string& s) {
  if (s == "third") return TrimBound::third;
  if (s == "unit") return TrimBound::unit;
  throw ArgumentError("unknown trim bound '" + s + "' (expected third or unit)");
}

Matrix logit_transform_trim(const Matrix& mean_adjacency, Index m, TrimBound bound) {
  if (m < 1) throw ArgumentError("logit_transform_trim: m must be positive");
  const double md = static_cast<double>(m);
  const double lo = std::min(0.5, bound == TrimBound::third ? 1.0 / (3.0 * md) : 1.0 / md);
  const double hi = 1.0 - lo;
  Matrix out(mean_adjacency.rows(), mean_adjacency.cols());
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 0; i < out.rows(); ++i) {
      const double v = mean_adjacency(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ArgumentError("logit_transform_trim: entries must lie in [0, 1]");
      }
      const double c = std::clamp(v, lo, hi);
      out(i, j) = std::log(c / (1.0 - c));
    }
  }
  return out;
}

namespace {

// Group parameter estimates on the link scale, S entries filled by rank-d
// imputation from the held-out entries only.
Matrix linked_estimate(const HeldOutView& view, int g, const EdgeFamily& family, Index d,
                       const LearnOptions& opt) {
  if (!family.binary()) return view.masked_mean(g, 0.0);
  const Matrix linked = logit_transform_trim(view.masked_mean(g, 0.5), view.layers(), opt.trim);
  const BoolMatrix observed = view.mask().array() == false;
  return hard_impute(linked, observed, d, opt.link_max_iter, opt.impute_tol).completed;
}

}  // namespace

ProjectionPair learn_projections_rect(const TwoSampleData& data, const HypothesisSet& s, Index d,
                                      const LearnOptions& opt) {
  check_dim(d);
  if (!s.kronecker_compatible()) {
    throw ArgumentError("one-step learning needs a directed rectangular hypothesis set; "
                        "use imputation for general or undirected sets");
  }
  const BlockPartition part = BlockPartition::from(s, data.nodes());
  if (d > std::min(s.row_count(), s.col_count())) {
    throw ArgumentError("d exceeds min(r, c) of the hypothesis rectangle");
  }
  const Index d_star = opt.d_star.value_or(d);
  const HeldOutView view(data, s);
  BlockDifferences blocks;
  if (data.family().binary()) {
    const Matrix t1 = linked_estimate(view, 1, data.family(), d_star, opt);
    const Matrix t2 = linked_estimate(view, 2, data.family(), d_star, opt);
    const Matrix diff = t1 - t2;
    blocks.C = take_block(diff, part.rows, part.rest_cols);
    blocks.R = take_block(diff, part.rest_rows, part.cols);
    blocks.D = take_block(diff, part.rest_rows, part.rest_cols);
  } else {
    blocks = block_means(view, part);
  }
  const Matrix t = one_step_T(blocks, std::min(d_star, std::min(blocks.D.rows(), blocks.D.cols())));
  const Leading lead = leading_subspaces(t, d);
  ProjectionPair p = ProjectionPair::kronecker(lead.u, lead.v, "learned-rect");
  p.requested_dim = d;
  p.padded = lead.padded;
  return p;
}

ProjectionPair learn_projections_impute(const TwoSampleData& data, const HypothesisSet& s, Index d,
                                        const LearnOptions& opt) {
  check_dim(d);
  const Index n = data.nodes();
  if (d > n) throw ArgumentError("d exceeds the node count");
  const HeldOutView view(data, s);
  const BoolMatrix observed = view.mask().array() == false;
  Matrix diff;
  if (data.family().binary()) {
    diff = logit_transform_trim(view.masked_mean(1, 0.5), view.layers(), opt.trim) -
           logit_transform_trim(view.masked_mean(2, 0.5), view.layers(), opt.trim);
  } else {
    diff = view.masked_mean(1) - view.masked_mean(2);
  }
  if (opt.center) {
    const double mean = observed.select(diff, Matrix::Zero(n, n)).sum() /
                        static_cast<double>(observed.count());
    diff.array() -= mean;
  }
  if (!s.directed()) diff = 0.5 * (diff + diff.transpose());
  const ImputeResult imp = hard_impute(diff, observed, d, opt.impute_max_iter, opt.impute_tol);
  Matrix completed = imp.completed;
  if (!s.directed()) completed = 0.5 * (completed + completed.transpose());

  ProjectionPair p;
  if (s.kronecker_compatible()) {
    if (d > std::min(s.row_count(), s.col_count())) {
      throw ArgumentError("d exceeds min(r, c) of the hypothesis rectangle");
    }
    const Leading lead = leading_subspaces(take_block(completed, s.rows(), s.cols()), d);
    p = ProjectionPair::kronecker(lead.u, lead.v, "learned-impute");
    p.padded = lead.padded;
  } else {
    const numkit::SvdResult svd = numkit::svd_thin(completed);
    if (!(svd.S(0) > 0.0)) throw DegenerateSignalError("imputed difference is identically zero");
    const Matrix ubar = svd.U.leftCols(d);
    const Matrix basis = s.directed() ? general_projection_basis(ubar, svd.V.leftCols(d), s)
                                      : undirected_projection_basis(ubar, s);
    p = ProjectionPair::general(basis, "learned-impute");
  }
  p.requested_dim = d;
  if (!imp.converged) p.provenance += " (imputation not converged)";
  return p;
}

namespace {

ProjectionPair finish_general(const Matrix& raw, const ProjectionPair& src, const std::string& tag) {
  if (raw.size() == 0 || raw.cwiseAbs().maxCoeff() <= 1e-12) {
    throw DegenerateSignalError(tag + " correction removes every projection direction");
  }
  Matrix basis = numkit::orthonormal_basis(raw);
  ProjectionPair out = ProjectionPair::general(std::move(basis), src.provenance + "+" + tag);
  out.requested_dim = src.requested_dim;
  out.padded = src.padded;
  return out;
}

Matrix remove_span(const Matrix& b, const Matrix& directions) {
  const Matrix q = numkit::orthonormal_basis(directions);
  return b - q * (q.transpose() * b);
}

}  // namespace

ProjectionPair density_correct(const ProjectionPair& p) {
  p.validate();
  const Matrix centered = p.basis.rowwise() - p.basis.colwise().mean();
  return finish_general(centered, p, "density");
}

ProjectionPair degree_correct(const ProjectionPair& p) {
  p.validate();
  if (!p.is_kronecker()) {
    throw ArgumentError("degree_correct on a general basis needs the hypothesis set");
  }
  // (C_c V) kron (C_r U) is exactly the projection of V kron U off the
  // row/column effect space, so the Kronecker structure survives.
  const Matrix cu = p.left->rowwise() - p.left->colwise().mean();
  const Matrix cv = p.right->rowwise() - p.right->colwise().mean();
  if (cu.cwiseAbs().maxCoeff() <= 1e-12 || cv.cwiseAbs().maxCoeff() <= 1e-12) {
    throw DegenerateSignalError("degree correction removes every projection direction");
  }
  ProjectionPair out = ProjectionPair::kronecker(numkit::orthonormal_basis(cu),
                                                 numkit::orthonormal_basis(cv),
                                                 p.provenance + "+degree");
  out.requested_dim = p.requested_dim;
  out.padded = p.padded;
  return out;
}

ProjectionPair degree_correct(const ProjectionPair& p, const HypothesisSet& s) {
  if (p.is_kronecker()) return degree_correct(p);
  p.validate();
  const auto pairs = s.response_pairs();
  if (static_cast<Index>(pairs.size()) != p.basis.rows()) {
    throw ArgumentError("degree_correct: basis does not match the hypothesis set");
  }
  std::set<Index> rows, cols;
  for (const auto& pr : pairs) {
    rows.insert(pr.row);
    cols.insert(pr.col);
    if (!s.directed()) {
      rows.insert(pr.col);
    }
  }
  const std::vector<Index> rv(rows.begin(), rows.end());
  const std::vector<Index> cv = s.directed() ? std::vector<Index>(cols.begin(), cols.end())
                                             : std::vector<Index>{};
  Matrix e = Matrix::Zero(p.basis.rows(), static_cast<Index>(rv.size() + cv.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Index row = static_cast<Index>(i);
    for (std::size_t k = 0; k < rv.size(); ++k) {
      if (s.directed() ? pairs[i].row == rv[k]
                       : (pairs[i].row == rv[k] || pairs[i].col == rv[k])) {
        e(row, static_cast<Index>(k)) += 1.0;
      }
    }
    for (std::size_t k = 0; k < cv.size(); ++k) {
      if (pairs[i].col == cv[k]) e(row, static_cast<Index>(rv.size() + k)) = 1.0;
    }
  }
  return finish_general(remove_span(p.basis, e), p, "degree");
}

ProjectionPair row_hypothesis_projection(const TwoSampleData& data, const HypothesisSet& s,
                                         Index d_star) {
  check_dim(d_star);
  if (!s.kronecker_compatible()) {
    throw ArgumentError("row/column hypothesis needs a directed rectangular set");
  }
  const bool row_case = s.row_count() == 1;
  if (!row_case && s.col_count() != 1) {
    throw ArgumentError("row_hypothesis_projection needs r = 1 or c = 1");
  }
  const BlockPartition part = BlockPartition::from(s, data.nodes());
  const HeldOutView view(data, s);
  const EdgeFamily fam = data.family();
  auto linked_block = [&](const std::vector<Index>& rows, const std::vector<Index>& cols) {
    Matrix a = view.block(1, rows, cols);
    Matrix b = view.block(2, rows, cols);
    if (fam.binary()) {
      a = logit_transform_trim(a, view.layers());
      b = logit_transform_trim(b, view.layers());
    }
    return Matrix(a - b);
  };
  const Matrix block = row_case ? linked_block(part.rest_rows, part.cols)
                                : linked_block(part.rows, part.rest_cols);
  if (block.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateSignalError("held-out block difference is zero");
  }
  const Index other = row_case ? s.col_count() : s.row_count();
  if (d_star > std::min(other, row_case ? block.rows() : block.cols())) {
    throw ArgumentError("d_star exceeds the available dimension");
  }
  const numkit::SvdResult svd = numkit::svd_thin(block);
  const double tol = numkit::rank_tolerance(svd.S, block.rows(), block.cols());
  Index rank = 0;
  while (rank < svd.S.size() && svd.S(rank) > tol) ++rank;
  const Matrix one = Matrix::Ones(1, 1);
  ProjectionPair p = row_case
                         ? ProjectionPair::kronecker(one, svd.V.leftCols(d_star), "learned-row")
                         : ProjectionPair::kronecker(svd.U.leftCols(d_star), one, "learned-col");
  p.requested_dim = d_star;
  p.padded = d_star > rank;
  return p;
}

std::optional<Index> elbow(const Vector& s, Index max_d) {
  if (s.size() < 2) return std::nullopt;
  const Index limit = max_d > 0 ? std::min(max_d, s.size() - 1) : s.size() - 1;
  const double tiny = numkit::rank_tolerance(s, s.size(), s.size());
  Index best = 0;
  double best_ratio = 0.0;
  for (Index i = 0; i < limit; ++i) {
    if (s(i) <= tiny) break;
    if (s(i + 1) <= tiny) return i + 1;
    const double ratio = s(i) / s(i + 1);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i + 1;
    }
  }
  if (best == 0) return std::nullopt;
  return best;
}

SpectralDiag spectral_diagnostics(const TwoSampleData& data, const HypothesisSet& s) {
  const HeldOutView view(data, s);
  Matrix target;
  if (s.kronecker_compatible()) {
    const BlockPartition part = BlockPartition::from(s, data.nodes());
    target = block_means(view, part).D;
  } else {
    target = view.masked_mean(1) - view.masked_mean(2);
  }
  SpectralDiag diag;
  diag.singular_values = target.cwiseAbs().maxCoeff() > 0.0
                             ? numkit::svd_thin(target).S
                             : Vector::Zero(std::min(target.rows(), target.cols()));
  diag.suggested_d = elbow(diag.singular_values, 20);
  return diag;
}

void fill_oracle_diagnostics(SpectralDiag& diag, const Matrix& theta_diff, const BlockPartition& part,
                             Index d) {
  const numkit::SvdResult svd = numkit::svd_thin(theta_diff);
  if (d < 1 || d > svd.S.size()) throw ArgumentError("oracle diagnostics: bad rank");
  auto extremes = [](const Matrix& block) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(block.transpose() * block, Eigen::EigenvaluesOnly);
    return std::make_pair(es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff());
  };
  const auto [ru, ku] = extremes(take_rows(svd.U.leftCols(d), part.rows));
  const auto [rv, kv] = extremes(take_rows(svd.V.leftCols(d), part.cols));
  diag.rho_u = ru;
  diag.kappa_u = ku;
  diag.rho_v = rv;
  diag.kappa_v = kv;
}

}  // namespace mesonet
