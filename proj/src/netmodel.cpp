#include "mesonet/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mesonet/errors.hpp"

namespace mesonet {

double EdgeFamily::mean(double eta) const {
  if (kind == FamilyKind::gaussian) return eta;
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double EdgeFamily::mean_derivative(double eta) const {
  if (kind == FamilyKind::gaussian) return 1.0;
  const double mu = mean(eta);
  return mu * (1.0 - mu);
}

double EdgeFamily::link(double mu) const {
  if (kind == FamilyKind::gaussian) return mu;
  return std::log(mu / (1.0 - mu));
}

std::string EdgeFamily::name() const {
  return kind == FamilyKind::gaussian ? "gaussian" : "logit";
}

EdgeFamily EdgeFamily::parse(const std::string& name) {
  if (name == "gaussian") return gaussian();
  if (name == "logit" || name == "bernoulli_logit" || name == "binary") return logit();
  throw ArgumentError("unknown edge family '" + name + "' (expected gaussian or logit)");
}

NetworkStack::NetworkStack(std::vector<Matrix> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ArgumentError("network stack needs at least one layer");
  n_ = layers_.front().rows();
  if (n_ < 1) throw ArgumentError("network stack needs at least one node");
  for (const auto& a : layers_) {
    if (a.rows() != n_ || a.cols() != n_) {
      throw ArgumentError("all layers must be n x n with a shared n");
    }
    if (!a.allFinite()) throw ArgumentError("network layer has non-finite entries");
  }
}

Matrix NetworkStack::mean() const {
  Matrix out = Matrix::Zero(n_, n_);
  for (const auto& a : layers_) out += a;
  return out / static_cast<double>(layers_.size());
}

bool NetworkStack::is_binary() const {
  for (const auto& a : layers_) {
    if (!(a.array() == 0.0 || a.array() == 1.0).all()) return false;
  }
  return true;
}

TwoSampleData::TwoSampleData(NetworkStack sample1, NetworkStack sample2, EdgeFamily family)
    : s1_(std::move(sample1)), s2_(std::move(sample2)), family_(family) {
  if (s1_.nodes() != s2_.nodes()) throw ArgumentError("samples must share the node count");
  if (s1_.layers() != s2_.layers()) throw ArgumentError("samples must have equal layer counts");
  if (family_.binary() && (!s1_.is_binary() || !s2_.is_binary())) {
    throw ArgumentError("binary edge family requires 0/1 edge values");
  }
}

HypothesisSet HypothesisSet::rectangle(std::vector<Index> rows, std::vector<Index> cols,
                                       bool directed, bool include_diagonal) {
  if (rows.empty() || cols.empty()) throw ArgumentError("hypothesis rectangle is empty");
  auto has_dupes = [](std::vector<Index> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) != v.end();
  };
  if (has_dupes(rows) || has_dupes(cols)) {
    throw ArgumentError("hypothesis rectangle has repeated row or column indices");
  }
  std::vector<NodePair> pairs;
  pairs.reserve(rows.size() * cols.size());
  bool hits_diagonal = false;
  for (Index c : cols) {
    for (Index r : rows) {
      if (r == c) hits_diagonal = true;
      pairs.push_back({r, c});
    }
  }
  if (!include_diagonal && hits_diagonal) {
    return from_pairs(std::move(pairs), directed, false);
  }
  HypothesisSet s;
  s.rectangle_ = true;
  s.directed_ = directed;
  s.include_diagonal_ = include_diagonal;
  s.rows_ = std::move(rows);
  s.cols_ = std::move(cols);
  s.pairs_ = std::move(pairs);
  if (!directed) {
    std::set<std::pair<Index, Index>> seen;
    for (const auto& p : s.pairs_) seen.insert({p.row, p.col});
    for (const auto& p : s.pairs_) {
      if (!seen.count({p.col, p.row})) {
        throw ArgumentError("undirected hypothesis set must contain symmetric counterparts");
      }
    }
  }
  return s;
}

HypothesisSet HypothesisSet::from_pairs(std::vector<NodePair> pairs, bool directed,
                                        bool include_diagonal) {
  if (!include_diagonal) {
    std::erase_if(pairs, [](const NodePair& p) { return p.row == p.col; });
  }
  if (pairs.empty()) throw ArgumentError("hypothesis set is empty");
  for (const auto& p : pairs) {
    if (p.row < 0 || p.col < 0) throw ArgumentError("hypothesis pair has a negative index");
  }
  std::sort(pairs.begin(), pairs.end(), [](const NodePair& a, const NodePair& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
    throw ArgumentError("hypothesis set has duplicate pairs");
  }
  HypothesisSet s;
  s.directed_ = directed;
  s.include_diagonal_ = include_diagonal;
  if (!directed) {
    std::set<std::pair<Index, Index>> seen;
    for (const auto& p : pairs) seen.insert({p.row, p.col});
    for (const auto& p : pairs) {
      if (!seen.count({p.col, p.row})) {
        throw ArgumentError("undirected hypothesis set must contain symmetric counterparts");
      }
    }
  }
  // Detect a full rectangle so the Kronecker fast path stays available.
  std::set<Index> rs, cs;
  for (const auto& p : pairs) {
    rs.insert(p.row);
    cs.insert(p.col);
  }
  if (rs.size() * cs.size() == pairs.size()) {
    s.rectangle_ = true;
    s.rows_.assign(rs.begin(), rs.end());
    s.cols_.assign(cs.begin(), cs.end());
  }
  s.pairs_ = std::move(pairs);
  return s;
}

std::vector<NodePair> HypothesisSet::response_pairs() const {
  if (directed_) return pairs_;
  std::vector<NodePair> out;
  for (const auto& p : pairs_) {
    if (p.row <= p.col) out.push_back(p);
  }
  return out;
}

void HypothesisSet::validate(Index n) const {
  for (const auto& p : pairs_) {
    if (p.row < 0 || p.col < 0 || p.row >= n || p.col >= n) {
      throw ArgumentError("hypothesis pair (" + std::to_string(p.row + 1) + "," +
                          std::to_string(p.col + 1) + ") lies outside the " +
                          std::to_string(n) + "-node network");
    }
  }
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> HypothesisSet::mask(Index n) const {
  validate(n);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  for (const auto& p : pairs_) m(p.row, p.col) = true;
  return m;
}

ProjectionPair ProjectionPair::kronecker(Matrix u, Matrix v, std::string provenance) {
  ProjectionPair p;
  p.basis = numkit::kron(v, u);
  p.requested_dim = std::max(u.cols(), v.cols());
  p.left = std::move(u);
  p.right = std::move(v);
  p.provenance = std::move(provenance);
  p.validate();
  return p;
}

ProjectionPair ProjectionPair::general(Matrix basis, std::string provenance) {
  ProjectionPair p;
  p.basis = std::move(basis);
  p.requested_dim = p.basis.cols();
  p.provenance = std::move(provenance);
  p.validate();
  return p;
}

void ProjectionPair::validate() const {
  if (basis.cols() < 1) throw ArgumentError("projection basis has no columns");
  if (basis.cols() > basis.rows()) throw ArgumentError("projection basis has more columns than rows");
  const Matrix gram = basis.transpose() * basis;
  const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (!(err <= 1e-10)) throw ArgumentError("projection basis columns are not orthonormal");
  if (left && (left->cols() > left->rows())) throw ArgumentError("left projection has d_r > r");
  if (right && (right->cols() > right->rows())) throw ArgumentError("right projection has d_c > c");
}

Matrix build_response(const TwoSampleData& data, const HypothesisSet& s) {
  s.validate(data.nodes());
  const auto pairs = s.response_pairs();
  if (pairs.empty()) throw ArgumentError("hypothesis set is empty");
  const Index p = static_cast<Index>(pairs.size());
  const Index m = data.layers();
  Matrix y(2 * p, m);
  for (Index k = 0; k < m; ++k) {
    const Matrix& a1 = data.sample1().layer(k);
    const Matrix& a2 = data.sample2().layer(k);
    for (Index i = 0; i < p; ++i) {
      y(i, k) = a1(pairs[i].row, pairs[i].col);
      y(p + i, k) = a2(pairs[i].row, pairs[i].col);
    }
  }
  return y;
}

Matrix build_design(const ProjectionPair& proj, Index m) {
  if (m < 1) throw ArgumentError("build_design: m must be positive");
  const Matrix& b = proj.basis;
  const Index p = b.rows();
  const Index q = b.cols();
  Matrix block(2 * p, 2 * q);
  block << b, b, b, -b;
  Matrix x(2 * p * m, 2 * q);
  for (Index k = 0; k < m; ++k) x.middleRows(k * 2 * p, 2 * p) = block;
  return x;
}

Matrix selection_map(const HypothesisSet& s, Index n) {
  s.validate(n);
  Matrix pi = Matrix::Zero(s.size(), n * n);
  for (Index i = 0; i < s.size(); ++i) {
    const auto& pr = s.pairs()[static_cast<std::size_t>(i)];
    pi(i, pr.row + n * pr.col) = 1.0;
  }
  return pi;
}

SymmetryMaps symmetry_maps(const HypothesisSet& s, Index n) {
  s.validate(n);
  std::set<std::pair<Index, Index>> seen;
  for (const auto& p : s.pairs()) seen.insert({p.row, p.col});
  for (const auto& p : s.pairs()) {
    if (!seen.count({p.col, p.row})) {
      throw ArgumentError("symmetry_maps: hypothesis set is not closed under transposition");
    }
  }
  const auto upper_pairs = [&] {
    std::vector<NodePair> out;
    for (const auto& p : s.pairs()) {
      if (p.row <= p.col) out.push_back(p);
    }
    return out;
  }();
  HypothesisSet upper = HypothesisSet::from_pairs(upper_pairs, true, true);
  Matrix g = Matrix::Zero(s.size(), upper.size());
  for (Index i = 0; i < s.size(); ++i) {
    const auto& p = s.pairs()[static_cast<std::size_t>(i)];
    const NodePair target{std::min(p.row, p.col), std::max(p.row, p.col)};
    const auto it = std::find(upper.pairs().begin(), upper.pairs().end(), target);
    g(i, it - upper.pairs().begin()) = 1.0;
  }
  // G has orthogonal columns, so its pseudo-inverse averages duplicated rows.
  const Vector counts = g.colwise().sum().transpose();
  Matrix g_pinv = g.transpose();
  for (Index j = 0; j < g_pinv.rows(); ++j) g_pinv.row(j) /= counts(j);
  return {std::move(g), std::move(g_pinv), std::move(upper)};
}

Matrix undirected_projection_basis(const Matrix& ubar, const HypothesisSet& s) {
  const Index n = ubar.rows();
  const SymmetryMaps maps = symmetry_maps(s, n);
  const Index d = ubar.cols();
  Matrix restricted(s.size(), d * d);
  for (Index i = 0; i < s.size(); ++i) {
    const auto& p = s.pairs()[static_cast<std::size_t>(i)];
    // Row (i + n j) of (Ubar kron Ubar) is kron(Ubar.row(j), Ubar.row(i)).
    for (Index a = 0; a < d; ++a) {
      for (Index b = 0; b < d; ++b) restricted(i, a * d + b) = ubar(p.col, a) * ubar(p.row, b);
    }
  }
  const Matrix mapped = maps.g_pinv * restricted;
  if (mapped.cwiseAbs().maxCoeff() == 0.0) {
    throw ArgumentError("undirected_projection_basis: projected column space is empty");
  }
  return numkit::orthonormal_basis(mapped);
}

Matrix general_projection_basis(const Matrix& ubar, const Matrix& vbar, const HypothesisSet& s) {
  s.validate(ubar.rows());
  const auto pairs = s.response_pairs();
  Matrix restricted(static_cast<Index>(pairs.size()), ubar.cols() * vbar.cols());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (Index a = 0; a < vbar.cols(); ++a) {
      for (Index b = 0; b < ubar.cols(); ++b) {
        restricted(static_cast<Index>(i), a * ubar.cols() + b) =
            vbar(pairs[i].col, a) * ubar(pairs[i].row, b);
      }
    }
  }
  if (restricted.cwiseAbs().maxCoeff() == 0.0) {
    throw ArgumentError("general_projection_basis: projected column space is empty");
  }
  return numkit::orthonormal_basis(restricted);
}

std::pair<Vector, Vector> response_means(const TwoSampleData& data, const HypothesisSet& s) {
  const Matrix y = build_response(data, s);
  const Index p = y.rows() / 2;
  const Vector mean = y.rowwise().mean();
  return {mean.head(p), mean.tail(p)};
}

}  // namespace mesonet
