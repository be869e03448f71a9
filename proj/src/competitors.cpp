#include "mesonet/competitors.hpp"

#include <algorithm>
#include <cmath>

#include "mesonet/errors.hpp"
#include "mesonet/truncated_svd.hpp"

namespace mesonet {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
}

TestReport plain_report(const std::string& method, Index dim, double alpha, const std::string& prov) {
  TestReport r;
  r.method = method;
  r.alpha = alpha;
  r.effective_dim = dim;
  r.requested_dim = dim;
  r.provenance = prov;
  return r;
}

double s_block_distance(const Matrix& a, const Matrix& b, const HypothesisSet& s) {
  double total = 0.0;
  for (const auto& p : s.pairs()) {
    const double d = a(p.row, p.col) - b(p.row, p.col);
    total += d * d;
  }
  return std::sqrt(total);
}

}  // namespace

TestReport basic_gaussian_f_test(const TwoSampleData& data, const HypothesisSet& s, double alpha) {
  check_alpha(alpha);
  if (data.family().kind != FamilyKind::gaussian) {
    throw ArgumentError("basic F test requires the gaussian family");
  }
  if (data.layers() < 2) throw ArgumentError("basic F test is only possible for m > 1");
  const Matrix y = build_response(data, s);
  const Index p = y.rows() / 2;
  const Index m = y.cols();
  const Vector ysum = y.rowwise().sum();
  const double num = 0.5 * (ysum.head(p) - ysum.tail(p)).squaredNorm();
  const double denom = (y.colwise() - y.rowwise().mean()).squaredNorm();
  const double nu1 = static_cast<double>(p);
  const double nu2 = 2.0 * static_cast<double>((m - 1) * p);
  TestReport r = plain_report("Basic", p, alpha, "identity");
  if (denom <= 0.0) {
    if (num > 0.0) throw NumericalError("basic F test: zero within-group variance");
    r.statistic = 0.0;
  } else {
    r.statistic = nu2 * num / (nu1 * static_cast<double>(m) * denom);
  }
  r.ref = ReferenceDistribution::f(nu1, nu2);
  r.finalize();
  return r;
}

TestReport basic_proportion_test(const TwoSampleData& data, const HypothesisSet& s, double alpha) {
  check_alpha(alpha);
  if (!data.family().binary()) throw ArgumentError("proportion test requires binary edges");
  const Matrix y = build_response(data, s);
  const Index p = y.rows() / 2;
  const double m = static_cast<double>(y.cols());
  TestReport r = plain_report("Basic", p, alpha, "identity");
  r.ref = ReferenceDistribution::chi2(static_cast<double>(p));
  if (y.cols() == 1) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.reject = false;
    r.notes.push_back("m = 1: proportion test is trivial and never rejects");
    return r;
  }
  const Vector ysum = y.rowwise().sum();
  double stat = 0.0;
  for (Index i = 0; i < p; ++i) {
    const double p1 = ysum(i) / m;
    const double p2 = ysum(p + i) / m;
    const double pooled = 0.5 * (p1 + p2);
    const double var = pooled * (1.0 - pooled) * (2.0 / m);
    if (var > 0.0) stat += (p1 - p2) * (p1 - p2) / var;
  }
  r.statistic = stat;
  r.finalize();
  return r;
}

double admm_objective(const Matrix& abar1, const Matrix& abar2, const Matrix& theta1,
                      const Matrix& theta2) {
  return (abar1 - theta1).squaredNorm() + (abar2 - theta2).squaredNorm();
}

AdmmResult admm_constrained(const Matrix& abar1, const Matrix& abar2, const HypothesisSet& s,
                            Index d, const AdmmOptions& opt) {
  if (!(opt.rho > 0.0)) throw ArgumentError("ADMM step size rho must be positive");
  if (opt.max_iter < 1) throw ArgumentError("ADMM iteration cap K must be positive");
  const Index n = abar1.rows();
  if (abar1.cols() != n || abar2.rows() != n || abar2.cols() != n) {
    throw ArgumentError("ADMM inputs must be n x n matrices of equal size");
  }
  if (d < 1 || d > n) throw ArgumentError("ADMM rank d must lie in [1, n]");
  const BoolMatrix in_s = s.mask(n);
  const double rho = opt.rho;

  const Matrix pooled = 0.5 * (abar1 + abar2);
  Matrix z1 = in_s.select(pooled, abar1);
  Matrix z2 = in_s.select(pooled, abar2);
  Matrix u1 = Matrix::Zero(n, n);
  Matrix u2 = Matrix::Zero(n, n);
  Matrix w1(n, n), w2(n, n);
  numkit::TruncatedSvd t1(d), t2(d);

  const double a_on = 2.0 / (4.0 + 2.0 * rho);
  const double b_on = rho / (4.0 + 2.0 * rho);
  const double a_off = 2.0 / (2.0 + rho);
  const double b_off = rho / (2.0 + rho);

  AdmmResult out;
  for (int k = 1; k <= opt.max_iter; ++k) {
    const Matrix shared = a_on * (abar1 + abar2) + b_on * (z1 + z2 - u1 - u2);
    w1 = in_s.select(shared, a_off * abar1 + b_off * (z1 - u1));
    w2 = in_s.select(shared, a_off * abar2 + b_off * (z2 - u2));

    t1.compute(w1 + u1);
    t2.compute(w2 + u2);
    const Matrix nz1 = t1.low_rank();
    const Matrix nz2 = t2.low_rank();

    u1 += w1 - nz1;
    u2 += w2 - nz2;
    const double step = (nz1 - z1).squaredNorm() + (nz2 - z2).squaredNorm();
    z1 = nz1;
    z2 = nz2;
    double gap = 0.0;
    for (const auto& p : s.pairs()) gap += std::abs(z1(p.row, p.col) - z2(p.row, p.col));
    out.iterations = k;
    out.s_gap_l1 = gap;
    if (std::max(step, gap) < opt.tol) {
      out.converged = true;
      break;
    }
  }
  out.theta1 = std::move(z1);
  out.theta2 = std::move(z2);
  out.objective = admm_objective(abar1, abar2, out.theta1, out.theta2);
  return out;
}

TestReport position_bootstrap_test(const TwoSampleData& data, const HypothesisSet& s, Index p,
                                   RandomStream& rng, double alpha, const BootstrapOptions& opt) {
  check_alpha(alpha);
  if (opt.replicates < 100) throw ArgumentError("bootstrap needs at least 100 replicates");
  const Index n = data.nodes();
  if (p < 1 || p > n) throw ArgumentError("latent dimension p must lie in [1, n]");
  s.validate(n);
  const Matrix abar1 = data.sample1().mean();
  const Matrix abar2 = data.sample2().mean();
  const Index m = data.layers();
  const bool binary = data.family().binary();

  numkit::TruncatedSvd f1(p), f2(p);
  f1.compute(abar1);
  f2.compute(abar2);
  const double observed = s_block_distance(f1.low_rank(), f2.low_rank(), s);

  const AdmmResult fit = admm_constrained(abar1, abar2, s, p, opt.admm);
  // Bootstrap means agree exactly on S.
  const BoolMatrix in_s = s.mask(n);
  const Matrix pooled = 0.5 * (fit.theta1 + fit.theta2);
  Matrix null1 = in_s.select(pooled, fit.theta1);
  Matrix null2 = in_s.select(pooled, fit.theta2);

  double sd = 0.0;
  if (binary) {
    null1 = null1.cwiseMax(0.0).cwiseMin(1.0);
    null2 = null2.cwiseMax(0.0).cwiseMin(1.0);
  } else {
    double rss = 0.0;
    long count = 0;
    for (Index k = 0; k < m; ++k) {
      const Matrix& a1 = data.sample1().layer(k);
      const Matrix& a2 = data.sample2().layer(k);
      for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
          if (in_s(i, j)) continue;
          const double r1 = a1(i, j) - fit.theta1(i, j);
          const double r2 = a2(i, j) - fit.theta2(i, j);
          rss += r1 * r1 + r2 * r2;
          count += 2;
        }
      }
    }
    if (count == 0) throw ArgumentError("hypothesis set leaves no edges to estimate the variance");
    sd = std::sqrt(rss / static_cast<double>(count) / static_cast<double>(m));
  }

  // Only layer means enter the statistic, so draw them directly.
  auto draw_mean = [&](const Matrix& theta) {
    Matrix out(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        out(i, j) = binary ? static_cast<double>(rng.binomial(static_cast<int>(m), theta(i, j))) /
                                 static_cast<double>(m)
                           : theta(i, j) + sd * rng.normal();
      }
    }
    return out;
  };
  int exceed = 0;
  for (int b = 0; b < opt.replicates; ++b) {
    const Matrix m1 = draw_mean(null1);
    const Matrix m2 = draw_mean(null2);
    f1.compute(m1);
    f2.compute(m2);
    if (s_block_distance(f1.low_rank(), f2.low_rank(), s) >= observed) ++exceed;
  }

  TestReport r = plain_report("Posn-" + std::to_string(p), p, alpha, "position-model");
  r.statistic = observed;
  r.ref = ReferenceDistribution::bootstrap(opt.replicates);
  r.p_value = (1.0 + exceed) / (opt.replicates + 1.0);
  r.reject = r.p_value < alpha;
  if (!binary) r.dispersion = sd * sd * static_cast<double>(m);
  if (!fit.converged) {
    r.notes.push_back("ADMM null fit stopped at the iteration cap (gap " +
                      std::to_string(fit.s_gap_l1) + ")");
  }
  return r;
}

TestReport auto_stat(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                     double alpha) {
  if (data.family().binary()) return stat_E(data, s, p, ThetaTildeMode::shrunk, alpha);
  if (data.layers() > 1) return stat_GP(data, s, p, alpha);
  return stat_G(data, s, p, alpha);
}

ProjectionPair random_projection(const HypothesisSet& s, Index d, RandomStream& rng) {
  if (d < 1) throw ArgumentError("projection dimension d must be at least 1");
  ProjectionPair proj;
  if (s.kronecker_compatible()) {
    if (d > std::min(s.row_count(), s.col_count())) {
      throw ArgumentError("d exceeds min(r, c) of the hypothesis rectangle");
    }
    const Matrix u = numkit::haar_stiefel(s.row_count(), d, rng);
    const Matrix v = numkit::haar_stiefel(s.col_count(), d, rng);
    proj = ProjectionPair::kronecker(u, v, "random");
  } else {
    const Index rows = static_cast<Index>(s.response_pairs().size());
    proj = ProjectionPair::general(numkit::haar_stiefel(rows, std::min(d * d, rows), rng), "random");
  }
  proj.requested_dim = d;
  return proj;
}

ProjectionPair block_projection(const HypothesisSet& s) {
  ProjectionPair proj;
  if (s.kronecker_compatible()) {
    const Matrix u = Matrix::Constant(s.row_count(), 1, 1.0 / std::sqrt(double(s.row_count())));
    const Matrix v = Matrix::Constant(s.col_count(), 1, 1.0 / std::sqrt(double(s.col_count())));
    proj = ProjectionPair::kronecker(u, v, "block");
  } else {
    const Index rows = static_cast<Index>(s.response_pairs().size());
    proj = ProjectionPair::general(Matrix::Constant(rows, 1, 1.0 / std::sqrt(double(rows))), "block");
  }
  proj.requested_dim = 1;
  return proj;
}

TestReport random_projection_test(const TwoSampleData& data, const HypothesisSet& s, Index d,
                                  RandomStream& rng, double alpha) {
  TestReport r = auto_stat(data, s, random_projection(s, d, rng), alpha);
  r.method = "RandProj-" + r.method;
  return r;
}

TestReport block_projection_test(const TwoSampleData& data, const HypothesisSet& s, double alpha) {
  TestReport r = auto_stat(data, s, block_projection(s), alpha);
  r.method = "BlockProj-" + r.method;
  return r;
}

}  // namespace mesonet
