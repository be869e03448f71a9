#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mesonet/errors.hpp"
#include "mesonet/projlearn.hpp"
#include "mesonet/simharness.hpp"
#include "mesonet/stattests.hpp"
#include "test_helpers.hpp"

using namespace mesonet;
using numkit::projector_distance;
using testutil::range;

namespace {

Matrix take(const Matrix& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

// Noiseless single-layer pair whose mean difference is `diff`.
TwoSampleData noiseless_pair(const Matrix& diff, std::uint64_t seed) {
  const Matrix base = testutil::gaussian_matrix(diff.rows(), diff.cols(), seed);
  return TwoSampleData(NetworkStack({base + diff}), NetworkStack({base}), EdgeFamily::gaussian());
}

// Orthonormal n x d matrix whose first k rows are a * (orthonormal) and the
// rest b * (orthonormal), a^2 + b^2 = 1.
Matrix block_scaled(Index n, Index k, Index d, double a, RandomStream& rng) {
  const double b = std::sqrt(1.0 - a * a);
  Matrix u(n, d);
  u.topRows(k) = a * numkit::haar_stiefel(k, d, rng);
  u.bottomRows(n - k) = b * numkit::haar_stiefel(n - k, d, rng);
  return u;
}

struct Prop2Instance {
  Matrix diff;
  HypothesisSet s = HypothesisSet::rectangle({0}, {0});
  Index d_star = 3;
};

// Rank-3 difference with block-orthonormal-up-to-scaling singular vectors.
// S occupies the first r rows and first c columns.
Prop2Instance prop2_instance(std::uint64_t seed) {
  const Index n = 14, r = 4, c = 5, d = 3;
  RandomStream rng(seed);
  const Matrix u = block_scaled(n, r, d, 0.6, rng);
  const Matrix v = block_scaled(n, c, d, 0.5, rng);
  Vector sv(3);
  sv << 9.0, 5.0, 2.0;
  Prop2Instance inst;
  inst.diff = u * sv.asDiagonal() * v.transpose();
  inst.s = HypothesisSet::rectangle(range(0, r), range(0, c));
  inst.d_star = d;
  return inst;
}

}  // namespace

TEST(BlockPartition, DisjointAndExhaustive) {
  const auto s = HypothesisSet::rectangle({1, 4}, {0, 2, 5});
  const auto part = BlockPartition::from(s, 7);
  EXPECT_EQ(part.rest_rows, (std::vector<Index>{0, 2, 3, 5, 6}));
  EXPECT_EQ(part.rest_cols, (std::vector<Index>{1, 3, 4, 6}));
  EXPECT_THROW(BlockPartition::from(HypothesisSet::rectangle(range(0, 4), {0}), 4), ArgumentError);
  EXPECT_THROW(BlockPartition::from(HypothesisSet::from_pairs({{0, 1}, {1, 2}}), 4), ArgumentError);
}

TEST(BlockMeans, SingleLayerAndIndexOracle) {
  const Index n = 7, m = 3;
  const auto data = testutil::gaussian_pair(Matrix::Zero(n, n), Matrix::Zero(n, n), m, 301);
  const auto s = HypothesisSet::rectangle({1, 4}, {0, 2, 5});
  const auto part = BlockPartition::from(s, n);
  const auto blocks = block_means(data, part);
  const Matrix diff = data.sample1().mean() - data.sample2().mean();
  EXPECT_LT((blocks.C - take(diff, part.rows, part.rest_cols)).norm(), 1e-14);
  EXPECT_LT((blocks.R - take(diff, part.rest_rows, part.cols)).norm(), 1e-14);
  EXPECT_LT((blocks.D - take(diff, part.rest_rows, part.rest_cols)).norm(), 1e-14);

  const Matrix a = testutil::gaussian_matrix(n, n, 302), b = testutil::gaussian_matrix(n, n, 303);
  TwoSampleData one(NetworkStack({a}), NetworkStack({b}), EdgeFamily::gaussian());
  EXPECT_EQ(block_means(one, part).D, take(a - b, part.rest_rows, part.rest_cols));

  TwoSampleData flat(NetworkStack({Matrix::Constant(n, n, 3.0), Matrix::Constant(n, n, 3.0)}),
                     NetworkStack({Matrix::Constant(n, n, 1.0), Matrix::Constant(n, n, 1.0)}),
                     EdgeFamily::gaussian());
  EXPECT_TRUE((block_means(flat, part).C.array() == 2.0).all());
}

TEST(OneStepT, ReproducesSBlockUnderScaledOrthonormality) {
  for (std::uint64_t seed : {311u, 312u, 313u}) {
    const auto inst = prop2_instance(seed);
    const auto data = noiseless_pair(inst.diff, seed + 10);
    const auto part = BlockPartition::from(inst.s, inst.diff.rows());
    const Matrix t = one_step_T(block_means(data, part), inst.d_star);
    const Matrix ds = take(inst.diff, part.rows, part.cols);
    // T is a scalar multiple of the S-block difference; the scalar works out to 1.
    const double scale = (t.array() * ds.array()).sum() / ds.squaredNorm();
    EXPECT_LT((t - scale * ds).norm(), 1e-9 * ds.norm());
    EXPECT_NEAR(scale, 1.0, 1e-9);
    EXPECT_EQ(numkit::numerical_rank(t), inst.d_star);
  }
}

TEST(OneStepT, ColumnAndRowSpacesUnderLinearIndependence) {
  const Index n = 15, r = 5, c = 6, d = 3;
  for (std::uint64_t seed : {321u, 322u, 323u, 324u}) {
    const Matrix diff = testutil::gaussian_matrix(n, d, seed) * testutil::gaussian_matrix(d, n, seed + 50);
    const auto s = HypothesisSet::rectangle(range(n - r, n), range(0, c));
    const auto part = BlockPartition::from(s, n);
    const Matrix t = one_step_T(block_means(noiseless_pair(diff, seed), part), d);
    const Matrix ds = take(diff, part.rows, part.cols);
    EXPECT_EQ(numkit::numerical_rank(t), d);
    EXPECT_LT(projector_distance(numkit::orthonormal_basis(t), numkit::orthonormal_basis(ds)), 1e-8);
    EXPECT_LT(projector_distance(numkit::orthonormal_basis(t.transpose()),
                                 numkit::orthonormal_basis(ds.transpose())),
              1e-8);
  }
}

TEST(OneStepT, ZeroSignalCases) {
  BlockDifferences b;
  b.C = Matrix::Zero(3, 4);
  b.R = testutil::gaussian_matrix(5, 2, 331);
  b.D = testutil::gaussian_matrix(5, 4, 332);
  EXPECT_EQ(one_step_T(b, 2).cwiseAbs().maxCoeff(), 0.0);
  b.D.setZero();
  EXPECT_THROW(one_step_T(b, 2), DegenerateSignalError);
  EXPECT_THROW(one_step_T(b, 0), ArgumentError);
}

TEST(LearnRect, RecoversOracleSubspacesForEveryD) {
  const auto inst = prop2_instance(341);
  const auto data = noiseless_pair(inst.diff, 342);
  const Matrix ds = take(inst.diff, inst.s.rows(), inst.s.cols());
  const numkit::SvdResult oracle = numkit::svd_thin(ds);
  for (Index d = 1; d <= inst.d_star; ++d) {
    LearnOptions opt;
    opt.d_star = inst.d_star;
    const ProjectionPair p = learn_projections_rect(data, inst.s, d, opt);
    EXPECT_LT(testutil::orth_error(*p.left), 1e-10);
    EXPECT_LT(projector_distance(*p.left, oracle.U.leftCols(d)), 1e-8) << "d=" << d;
    EXPECT_LT(projector_distance(*p.right, oracle.V.leftCols(d)), 1e-8) << "d=" << d;
    EXPECT_FALSE(p.padded);
    EXPECT_EQ(p.provenance, "learned-rect");
  }
}

TEST(LearnRect, SwapInvariance) {
  const Index n = 30;
  const auto data = testutil::gaussian_pair(testutil::gaussian_matrix(n, n, 351),
                                            testutil::gaussian_matrix(n, n, 352), 4, 353);
  const auto s = HypothesisSet::rectangle(range(0, 8), range(20, 30));
  const auto a = learn_projections_rect(data, s, 3);
  const auto b = learn_projections_rect(data.swapped(), s, 3);
  EXPECT_LT(projector_distance(*a.left, *b.left), 1e-10);
  EXPECT_LT(projector_distance(*a.right, *b.right), 1e-10);
  const auto c = learn_projections_impute(data, s, 3);
  const auto e = learn_projections_impute(data.swapped(), s, 3);
  EXPECT_LT(projector_distance(*c.left, *e.left), 1e-6);
}

TEST(LearnRect, PadsBeyondRank) {
  const Index n = 12;
  const Matrix diff = testutil::gaussian_matrix(n, 1, 361) * testutil::gaussian_matrix(1, n, 362);
  const auto s = HypothesisSet::rectangle(range(0, 4), range(0, 4));
  LearnOptions opt;
  opt.d_star = 1;
  const auto p = learn_projections_rect(noiseless_pair(diff, 363), s, 3, opt);
  EXPECT_TRUE(p.padded);
  EXPECT_EQ(p.dimension(), 9);
  EXPECT_EQ(p.requested_dim, 3);
  EXPECT_LT(testutil::orth_error(*p.left), 1e-10);
}

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

TEST(HardImpute, FullyObservedIsTruncation) {
  const Matrix m = testutil::gaussian_matrix(8, 6, 371);
  const BoolMatrix all = BoolMatrix::Constant(8, 6, true);
  const ImputeResult r = hard_impute(m, all, 2);
  EXPECT_LT((r.completed - numkit::rank_truncate(m, 2)).norm(), 1e-10);
  EXPECT_TRUE(r.converged);
}

TEST(HardImpute, RankOneSingleMissingEntry) {
  RandomStream rng(372);
  Vector u(6), v(5);
  for (Index i = 0; i < 6; ++i) u(i) = 1.0 + rng.uniform();
  for (Index i = 0; i < 5; ++i) v(i) = 0.5 + rng.uniform();
  const Matrix m = u * v.transpose();
  BoolMatrix obs = BoolMatrix::Constant(6, 5, true);
  obs(2, 3) = false;
  Matrix poisoned = m;
  poisoned(2, 3) = 1e6;  // must be ignored
  const ImputeResult r = hard_impute(poisoned, obs, 1, 5000, 1e-14);
  // Closed-form rank-one completion from any observed 2x2 minor.
  const double expected = m(2, 0) * m(0, 3) / m(0, 0);
  EXPECT_NEAR(r.completed(2, 3), expected, 1e-8);
}

TEST(HardImpute, ObjectiveNonIncreasing) {
  const Matrix low = testutil::gaussian_matrix(20, 3, 373) * testutil::gaussian_matrix(3, 18, 374);
  const Matrix m = low + 0.3 * testutil::gaussian_matrix(20, 18, 375);
  BoolMatrix obs = BoolMatrix::Constant(20, 18, true);
  obs.block(0, 0, 6, 7).setConstant(false);
  const ImputeResult r = hard_impute(m, obs, 3, 300, 1e-10);
  ASSERT_GE(r.objective.size(), 2u);
  for (std::size_t k = 1; k < r.objective.size(); ++k) {
    EXPECT_LE(r.objective[k], r.objective[k - 1] * (1 + 1e-12) + 1e-12) << "iteration " << k;
  }
  EXPECT_THROW(hard_impute(m, BoolMatrix::Constant(20, 18, false), 3), ArgumentError);
  EXPECT_THROW(hard_impute(m, obs, 0), ArgumentError);
}

TEST(LearnImpute, AgreesWithRectOnExactLowRank) {
  const auto inst = prop2_instance(381);
  const auto data = noiseless_pair(inst.diff, 382);
  LearnOptions opt;
  opt.impute_tol = 1e-14;
  opt.impute_max_iter = 20000;
  const auto rect = learn_projections_rect(data, inst.s, inst.d_star);
  const auto imp = learn_projections_impute(data, inst.s, inst.d_star, opt);
  EXPECT_LT(projector_distance(*rect.left, *imp.left), 1e-6);
  EXPECT_LT(projector_distance(*rect.right, *imp.right), 1e-6);
  EXPECT_EQ(imp.provenance.rfind("learned-impute", 0), 0u);
}

TEST(LearnImpute, ScreeIsMonotoneOnDistanceModel) {
  ScenarioConfig cfg;
  cfg.generator = GeneratorKind::gaussian_dist;
  cfg.regime = Regime::alternative;
  RandomStream rng(383);
  const auto sample = generate(cfg, 5, rng);
  const auto diag = spectral_diagnostics(sample.data, cfg.hypothesis());
  for (Index k = 1; k < diag.singular_values.size(); ++k) {
    EXPECT_LE(diag.singular_values(k), diag.singular_values(k - 1));
  }
}

TEST(LogitTrim, ValuesAndBounds) {
  Matrix a(1, 4);
  a << 0.5, 0.0, 1.0, 0.3;
  const Matrix t = logit_transform_trim(a, 3, TrimBound::third);
  EXPECT_NEAR(t(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(t(0, 1), std::log((1.0 / 9.0) / (8.0 / 9.0)), 1e-12);
  EXPECT_NEAR(t(0, 1), -2.0794415416798357, 1e-12);
  EXPECT_NEAR(t(0, 2), -t(0, 1), 1e-12);
  EXPECT_NEAR(t(0, 3), std::log(0.3 / 0.7), 1e-12);
  const Matrix u = logit_transform_trim(a, 4, TrimBound::unit);
  EXPECT_NEAR(u(0, 1), std::log(0.25 / 0.75), 1e-12);
  EXPECT_THROW(logit_transform_trim(a, 0), ArgumentError);
  EXPECT_THROW(logit_transform_trim(Matrix::Constant(1, 1, 1.5), 3), ArgumentError);
}

TEST(DensityCorrect, ConstantDirectionsCollapse) {
  const auto p = ProjectionPair::kronecker(Matrix::Constant(4, 1, 0.5), Matrix::Constant(9, 1, 1.0 / 3));
  EXPECT_THROW(density_correct(p), DegenerateSignalError);
}

TEST(DensityCorrect, OrthogonalToOnesAndKeepsCenteredSpace) {
  RandomStream rng(391);
  const auto p = ProjectionPair::kronecker(numkit::haar_stiefel(5, 2, rng), numkit::haar_stiefel(6, 2, rng));
  const auto q = density_correct(p);
  EXPECT_LT(testutil::orth_error(q.basis), 1e-10);
  EXPECT_LT((q.basis.transpose() * Vector::Ones(30)).cwiseAbs().maxCoeff(), 1e-10);
  // Projecting off 1 kron 1 keeps the dimension unless 1 kron 1 lies in the span.
  EXPECT_EQ(q.dimension(), 4);
  Matrix with_const(5, 2);
  with_const.col(0).setConstant(1.0 / std::sqrt(5.0));
  with_const.col(1) << 1, -1, 0, 0, 0;
  with_const.col(1) /= std::sqrt(2.0);
  const auto contains = ProjectionPair::kronecker(with_const, Matrix::Constant(6, 1, 1.0 / std::sqrt(6.0)));
  EXPECT_EQ(density_correct(contains).dimension(), 1);

  Matrix u = numkit::haar_stiefel(5, 2, rng);
  u.rowwise() -= u.colwise().mean();
  u = numkit::orthonormal_basis(u);
  const auto centered = ProjectionPair::kronecker(u, numkit::haar_stiefel(6, 1, rng));
  const auto kept = density_correct(centered);
  EXPECT_EQ(kept.dimension(), centered.dimension());
  EXPECT_LT(projector_distance(kept.basis, centered.basis), 1e-10);
}

TEST(DegreeCorrect, InsideDegreeSpaceCollapses) {
  Matrix e1 = Matrix::Zero(5, 1);
  e1(0, 0) = 1.0;
  const auto p = ProjectionPair::kronecker(Matrix::Constant(4, 1, 0.5), e1);
  EXPECT_THROW(degree_correct(p), DegenerateSignalError);
}

TEST(DegreeCorrect, OrthogonalToEveryDegreeDirection) {
  const Index r = 5, c = 6;
  RandomStream rng(392);
  const auto p = ProjectionPair::kronecker(numkit::haar_stiefel(r, 3, rng), numkit::haar_stiefel(c, 3, rng));
  const auto q = degree_correct(p);
  EXPECT_LT(testutil::orth_error(q.basis), 1e-10);
  const Matrix rows = numkit::kron(Matrix::Ones(c, 1), Matrix::Identity(r, r));
  const Matrix cols = numkit::kron(Matrix::Identity(c, c), Matrix::Ones(r, 1));
  EXPECT_LT((q.basis.transpose() * rows).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((q.basis.transpose() * cols).cwiseAbs().maxCoeff(), 1e-10);
  const auto s = HypothesisSet::rectangle(range(0, r), range(0, c));
  EXPECT_LT(projector_distance(degree_correct(p, s).basis, q.basis), 1e-10);
}

TEST(DegreeCorrect, StatisticInvariantToRowAndColumnShifts) {
  const Index n = 12, m = 4;
  const auto s = HypothesisSet::rectangle(range(0, 5), range(6, 12));
  RandomStream rng(393);
  const auto p = ProjectionPair::kronecker(numkit::haar_stiefel(5, 3, rng), numkit::haar_stiefel(6, 3, rng));
  const auto q = degree_correct(p);
  const auto qd = density_correct(p);
  const auto data = testutil::gaussian_pair(Matrix::Zero(n, n), Matrix::Zero(n, n), m, 394);
  Matrix shift = Matrix::Zero(n, n);
  const Vector a = testutil::gaussian_matrix(n, 1, 395), b = testutil::gaussian_matrix(n, 1, 396);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) shift(i, j) = 5.0 * (a(i) + b(j));
  std::vector<Matrix> shifted;
  for (Index k = 0; k < m; ++k) shifted.push_back(data.sample1().layer(k) + shift);
  const TwoSampleData moved(NetworkStack(shifted), data.sample2(), EdgeFamily::gaussian());
  EXPECT_NEAR(stat_GP(moved, s, q).statistic, stat_GP(data, s, q).statistic, 1e-8);
  // G is not included: its residual variance uses data outside col(B).
  EXPECT_NEAR(stat_E(moved, s, q).statistic, stat_E(data, s, q).statistic, 1e-8);

  // Density correction absorbs a constant shift.
  std::vector<Matrix> flat;
  for (Index k = 0; k < m; ++k) flat.push_back(data.sample1().layer(k).array() + 3.0);
  const TwoSampleData moved_c(NetworkStack(flat), data.sample2(), EdgeFamily::gaussian());
  EXPECT_NEAR(stat_GP(moved_c, s, qd).statistic, stat_GP(data, s, qd).statistic, 1e-8);
}

TEST(RowHypothesis, AttainsMaximumNoncentrality) {
  const Index n = 12, d = 2, m = 3;
  const double sigma2 = 2.0;
  const Matrix diff = testutil::gaussian_matrix(n, d, 401) * testutil::gaussian_matrix(d, n, 402);
  const auto s = HypothesisSet::rectangle({0}, range(4, 12));
  const auto p = row_hypothesis_projection(noiseless_pair(diff, 403), s, d);
  EXPECT_EQ(p.left->rows(), 1);
  EXPECT_EQ(p.right->cols(), d);
  const Matrix base = Matrix::Zero(n, n);
  const double psi = ncp_psi(diff, base, s, p, m, sigma2);
  const double bound = m * take(diff, {0}, range(4, 12)).squaredNorm() / (2 * sigma2);
  EXPECT_NEAR(psi, bound, 1e-9 * bound);

  // Column case mirrors the row case under transposition.
  const Matrix dt = diff.transpose();
  const auto sc = HypothesisSet::rectangle(range(4, 12), {0});
  const auto pc = row_hypothesis_projection(noiseless_pair(dt, 404), sc, d);
  EXPECT_LT(projector_distance(*pc.left, *p.right), 1e-10);
  EXPECT_EQ(pc.right->rows(), 1);
}

TEST(RowHypothesis, ErrorCases) {
  const Index n = 10;
  Matrix diff = Matrix::Zero(n, n);
  diff.row(0).setConstant(2.0);  // signal only on the S row
  const auto s = HypothesisSet::rectangle({0}, range(3, 10));
  EXPECT_THROW(row_hypothesis_projection(noiseless_pair(diff, 411), s, 1), DegenerateSignalError);
  const auto rect = HypothesisSet::rectangle({0, 1}, {3, 4});
  EXPECT_THROW(row_hypothesis_projection(noiseless_pair(diff, 412), rect, 1), ArgumentError);
}

TEST(HeldOut, ViewRefusesSEntries) {
  const auto data = testutil::gaussian_pair(Matrix::Zero(6, 6), Matrix::Zero(6, 6), 2, 421);
  const auto s = HypothesisSet::rectangle({0, 1}, {2, 3});
  const HeldOutView view(data, s);
  EXPECT_THROW(view.mean(1, 0, 2), HeldOutViolation);
  EXPECT_NO_THROW(view.mean(2, 0, 1));
  EXPECT_THROW(view.block(1, {0, 4}, {3}), HeldOutViolation);
  const Matrix mm = view.masked_mean(1, -7.0);
  EXPECT_EQ(mm(1, 3), -7.0);
  EXPECT_GT(view.reads(), 0);
}

TEST(HeldOut, LearnersIgnoreSEdges) {
  const Index n = 24, m = 3;
  const auto s = HypothesisSet::rectangle(range(0, 6), range(16, 24));
  for (bool binary : {false, true}) {
    TwoSampleData data = binary
        ? testutil::bernoulli_pair(Matrix::Constant(n, n, 0.4), Matrix::Constant(n, n, 0.6), m, 431)
        : testutil::gaussian_pair(testutil::gaussian_matrix(n, n, 432), Matrix::Zero(n, n), m, 433);
    // Replace every S edge with arbitrary values of the right type.
    RandomStream rng(434);
    auto poison = [&](const NetworkStack& st, const HypothesisSet& set) {
      std::vector<Matrix> layers;
      for (Index k = 0; k < m; ++k) {
        Matrix a = st.layer(k);
        for (const auto& pr : set.pairs()) a(pr.row, pr.col) = binary ? (rng.uniform() < 0.5 ? 1.0 : 0.0) : 1e4 * rng.normal();
        layers.push_back(a);
      }
      return NetworkStack(layers);
    };
    const TwoSampleData other(poison(data.sample1(), s), poison(data.sample2(), s), data.family());
    const auto a = learn_projections_rect(data, s, 2);
    const auto b = learn_projections_rect(other, s, 2);
    EXPECT_EQ(a.basis, b.basis);
    const auto c = learn_projections_impute(data, s, 2);
    const auto e = learn_projections_impute(other, s, 2);
    EXPECT_EQ(c.basis, e.basis);
    const auto sc = HypothesisSet::rectangle({3}, range(10, 20));
    EXPECT_EQ(row_hypothesis_projection(data, sc, 2).basis, row_hypothesis_projection(
        TwoSampleData(poison(data.sample1(), sc), data.sample2(), data.family()), sc, 2).basis);
  }
}

TEST(SpectralDiag, ElbowAndOrder) {
  Vector sv(5);
  sv << 10, 9, 8, 1, 0.9;
  EXPECT_EQ(elbow(sv).value(), 3);
  const auto data = testutil::gaussian_pair(testutil::gaussian_matrix(20, 20, 441), Matrix::Zero(20, 20), 2, 442);
  const auto diag = spectral_diagnostics(data, HypothesisSet::rectangle(range(0, 5), range(10, 20)));
  EXPECT_EQ(diag.singular_values.size(), 10);
  for (Index k = 1; k < diag.singular_values.size(); ++k)
    EXPECT_LE(diag.singular_values(k), diag.singular_values(k - 1));
}

TEST(LearnRect, SubspaceErrorShrinksWithM) {
  ScenarioConfig cfg;
  cfg.regime = Regime::alternative;
  const auto s = cfg.hypothesis();
  auto median_distance = [&](Index m) {
    std::vector<double> dist;
    for (int rep = 0; rep < 100; ++rep) {
      RandomStream rng = RandomStream::derive(451, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(rep));
      const auto sample = generate(cfg, m, rng);
      const Matrix ds = take(sample.theta1 - sample.theta2, s.rows(), s.cols());
      const auto oracle = numkit::svd_thin(ds);
      const auto p = learn_projections_rect(sample.data, s, 3);
      dist.push_back(projector_distance(*p.left, oracle.U.leftCols(3)));
    }
    std::nth_element(dist.begin(), dist.begin() + 50, dist.end());
    return dist[50];
  };
  EXPECT_LT(median_distance(10), median_distance(2));
}
