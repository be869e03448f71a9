#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mesonet/numkit.hpp"

/// Network samples, hypothesis sets and the vectorization maps that turn a
/// hypothesis set into a working GLM.
///
/// Node indices are 0-based throughout the C++ API. File formats and the CLI
/// use 1-based indices and convert at the boundary.
namespace mesonet {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

enum class FamilyKind { gaussian, bernoulli_logit };

/// Exponential-family edge distribution: inverse link h, its derivative, and
/// whether the dispersion is known (1 for the logistic model).
struct EdgeFamily {
  FamilyKind kind = FamilyKind::gaussian;
  bool dispersion_known = false;

  static EdgeFamily gaussian() { return {FamilyKind::gaussian, false}; }
  static EdgeFamily logit() { return {FamilyKind::bernoulli_logit, true}; }

  double mean(double eta) const;             // h
  double mean_derivative(double eta) const;  // h'
  double link(double mu) const;              // h^{-1}
  bool binary() const { return kind == FamilyKind::bernoulli_logit; }
  std::string name() const;
  static EdgeFamily parse(const std::string& name);
};

/// m layers of n x n edge values for one sample.
class NetworkStack {
 public:
  NetworkStack() = default;
  explicit NetworkStack(std::vector<Matrix> layers);

  Index nodes() const { return n_; }
  Index layers() const { return static_cast<Index>(layers_.size()); }
  const Matrix& layer(Index k) const { return layers_.at(static_cast<std::size_t>(k)); }
  const std::vector<Matrix>& all_layers() const { return layers_; }
  Matrix mean() const;
  bool is_binary() const;

 private:
  Index n_ = 0;
  std::vector<Matrix> layers_;
};

/// Two independent samples with equal node and layer counts.
class TwoSampleData {
 public:
  TwoSampleData(NetworkStack sample1, NetworkStack sample2, EdgeFamily family);

  const NetworkStack& sample(int g) const { return g == 1 ? s1_ : s2_; }
  const NetworkStack& sample1() const { return s1_; }
  const NetworkStack& sample2() const { return s2_; }
  const EdgeFamily& family() const { return family_; }
  Index nodes() const { return s1_.nodes(); }
  Index layers() const { return s1_.layers(); }
  TwoSampleData swapped() const { return TwoSampleData(s2_, s1_, family_); }

 private:
  NetworkStack s1_;
  NetworkStack s2_;
  EdgeFamily family_;
};

struct NodePair {
  Index row = 0;
  Index col = 0;
  friend bool operator==(const NodePair&, const NodePair&) = default;
};

/// Directed index set S of node pairs. Rectangles keep their row and column
/// lists (which need not be contiguous) and are enumerated in column-major
/// vec order of the r x c submatrix. General sets are enumerated in the
/// column-major vec order of the full n x n matrix.
class HypothesisSet {
 public:
  static HypothesisSet rectangle(std::vector<Index> rows, std::vector<Index> cols,
                                 bool directed = true, bool include_diagonal = true);
  static HypothesisSet from_pairs(std::vector<NodePair> pairs, bool directed = true,
                                  bool include_diagonal = true);

  bool is_rectangle() const { return rectangle_; }
  bool directed() const { return directed_; }
  bool include_diagonal() const { return include_diagonal_; }
  const std::vector<Index>& rows() const { return rows_; }
  const std::vector<Index>& cols() const { return cols_; }
  Index row_count() const { return static_cast<Index>(rows_.size()); }
  Index col_count() const { return static_cast<Index>(cols_.size()); }

  /// Every pair in canonical order.
  const std::vector<NodePair>& pairs() const { return pairs_; }
  Index size() const { return static_cast<Index>(pairs_.size()); }

  /// Pairs whose edges enter the response: all pairs when directed, only
  /// pairs on or above the diagonal when undirected.
  std::vector<NodePair> response_pairs() const;

  /// Throws ArgumentError if any pair falls outside [0, n).
  void validate(Index n) const;

  /// n x n mask, true on pairs of S.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(Index n) const;

  /// Whether a Kronecker pair (U, V) describes projections on this set.
  bool kronecker_compatible() const { return rectangle_ && directed_; }

 private:
  HypothesisSet() = default;
  bool rectangle_ = false;
  bool directed_ = true;
  bool include_diagonal_ = true;
  std::vector<Index> rows_;
  std::vector<Index> cols_;
  std::vector<NodePair> pairs_;
};

/// Projection onto a q-dimensional subspace of R^{|response pairs|}.
/// Rectangle sets carry the Kronecker factors (U, V) with basis = V kron U;
/// general, undirected, or corrected sets carry only the basis.
struct ProjectionPair {
  std::optional<Matrix> left;   // U, r x d_r
  std::optional<Matrix> right;  // V, c x d_c
  Matrix basis;                 // p x q, orthonormal columns
  Index requested_dim = 0;
  bool padded = false;
  std::string provenance = "fixed";

  static ProjectionPair kronecker(Matrix u, Matrix v, std::string provenance = "fixed");
  static ProjectionPair general(Matrix basis, std::string provenance = "fixed");

  Index dimension() const { return basis.cols(); }
  bool is_kronecker() const { return left.has_value() && right.has_value(); }
  /// Throws ArgumentError unless the basis has orthonormal columns within 1e-10.
  void validate() const;
};

/// (2p) x m response; column k stacks S-edges of layer k of sample 1 over sample 2.
Matrix build_response(const TwoSampleData& data, const HypothesisSet& s);

/// (2pm) x (2q) design 1_m kron [[B, B], [B, -B]] for basis B.
Matrix build_design(const ProjectionPair& p, Index m);

/// |S| x n^2 0/1 matrix extracting vec entries of S in canonical order.
Matrix selection_map(const HypothesisSet& s, Index n);

struct SymmetryMaps {
  Matrix g;       // |S| x |S_upper|
  Matrix g_pinv;  // |S_upper| x |S|
  HypothesisSet upper;
};

/// Maps between an undirected set and its on-or-above-diagonal restriction:
/// pi_S vec(M) = G pi_upper vec(M) for symmetric M.
SymmetryMaps symmetry_maps(const HypothesisSet& s, Index n);

/// Orthonormal basis for col{G^+ pi_S (Ubar kron Ubar)}; the working-GLM
/// basis for undirected hypothesis sets.
Matrix undirected_projection_basis(const Matrix& ubar, const HypothesisSet& s);

/// Basis of pi_S (Vbar kron Ubar) for a directed general set.
Matrix general_projection_basis(const Matrix& ubar, const Matrix& vbar, const HypothesisSet& s);

/// Pooled-over-layers values of S edges: p x 1 means per sample.
std::pair<Vector, Vector> response_means(const TwoSampleData& data, const HypothesisSet& s);

}  // namespace mesonet
