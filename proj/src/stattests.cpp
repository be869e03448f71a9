#include "mesonet/stattests.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mesonet/errors.hpp"

namespace mesonet {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
}

void check_conformal(const Matrix& y, const ProjectionPair& p) {
  if (y.rows() % 2 != 0 || y.rows() / 2 != p.basis.rows()) {
    throw ArgumentError("projection basis has " + std::to_string(p.basis.rows()) +
                        " rows but the response has " + std::to_string(y.rows() / 2) +
                        " node pairs per sample");
  }
  if (y.cols() < 1) throw ArgumentError("response has no layers");
}

TestReport base_report(const std::string& method, const ProjectionPair& p, double alpha) {
  TestReport r;
  r.method = method;
  r.alpha = alpha;
  r.effective_dim = p.dimension();
  r.requested_dim = p.requested_dim;
  r.padded = p.padded;
  r.provenance = p.provenance;
  if (p.is_kronecker()) {
    const Index full = p.left->cols() * p.right->cols();
    if (full != p.dimension()) r.notes.push_back("basis rank below d_r*d_c");
  }
  if (p.padded) r.notes.push_back("projection padded beyond the learned rank");
  return r;
}

// Newton iterations for a single-group logistic fit: ysum ~ Binomial(m, h(B a)).
struct LogitGroupFit {
  Vector coef;
  int iterations = 0;
  double max_score = 0.0;
  bool converged = false;
};

double logit_loglik(const Vector& eta, const Vector& ysum, double m) {
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    const double e = eta(i);
    const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += ysum(i) * e - m * log1pexp;
  }
  return ll;
}

// The score vanishes numerically long before coefficients reach infinity, so
// separation shows up as fitted probabilities pinned at 0 or 1.
void check_separation(const Vector& eta, int it) {
  constexpr double kMaxEta = 20.0;
  if (eta.size() > 0 && eta.cwiseAbs().maxCoeff() > kMaxEta) {
    throw NumericalError("logistic fit: fitted probabilities numerically 0 or 1 (separation)", it);
  }
}

LogitGroupFit fit_logit_group(const Matrix& b, const Vector& ysum, double m, double tol,
                              int max_iter) {
  const EdgeFamily fam = EdgeFamily::logit();
  LogitGroupFit out;
  out.coef = Vector::Zero(b.cols());
  Vector eta = Vector::Zero(b.rows());
  double ll = logit_loglik(eta, ysum, m);
  for (int it = 0; it <= max_iter; ++it) {
    Vector mu(eta.size()), w(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      mu(i) = fam.mean(eta(i));
      w(i) = fam.mean_derivative(eta(i));
    }
    const Vector score = b.transpose() * (ysum - m * mu);
    out.max_score = score.cwiseAbs().maxCoeff();
    out.iterations = it;
    if (out.max_score < tol) {
      check_separation(eta, it);
      out.converged = true;
      return out;
    }
    if (it == max_iter) break;
    const Matrix info = m * (b.transpose() * w.asDiagonal() * b);
    Eigen::LDLT<Matrix> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw NumericalError("logistic fit: information matrix is singular (separation?)", it);
    }
    const Vector step = ldlt.solve(score);
    if (!step.allFinite()) throw NumericalError("logistic fit: non-finite Newton step", it);
    double t = 1.0;
    Vector trial_coef;
    Vector trial_eta;
    double trial_ll = -INFINITY;
    for (int halve = 0; halve < 60; ++halve) {
      trial_coef = out.coef + t * step;
      trial_eta = b * trial_coef;
      trial_ll = logit_loglik(trial_eta, ysum, m);
      if (trial_ll >= ll - 1e-12 * std::abs(ll)) break;
      t *= 0.5;
    }
    // Stalled at machine precision: accept when the score is already tiny.
    if (t * step.norm() <= 1e-14 * (1.0 + out.coef.norm())) {
      if (out.max_score < std::max(tol, 1e-7)) {
        check_separation(eta, it);
        out.converged = true;
        return out;
      }
      throw NumericalError("logistic fit: step halving failed to increase the likelihood", it);
    }
    out.coef = trial_coef;
    eta = trial_eta;
    ll = trial_ll;
    if (out.coef.cwiseAbs().maxCoeff() > 1e3) {
      throw NumericalError("logistic fit diverged (coefficients beyond 1e3; likely separation)",
                           it + 1);
    }
  }
  throw NumericalError("logistic fit did not reach max |score| < tol (max |score| = " +
                           std::to_string(out.max_score) + ")",
                       max_iter);
}

// Fitted linear predictors [B(g1 + g2); B(g1 - g2)].
Vector fitted_eta(const ProjectionPair& p, const GlmFit& fit) {
  const Index n = p.basis.rows();
  Vector eta(2 * n);
  eta.head(n) = p.basis * (fit.gamma1 + fit.gamma2);
  eta.tail(n) = p.basis * (fit.gamma1 - fit.gamma2);
  return eta;
}

double theta_tilde_weight(double pbar, ThetaTildeMode mode, double m) {
  if (mode == ThetaTildeMode::shrunk) {
    const double shift = 1.0 / (4.0 * m);
    pbar = pbar < 0.5 ? std::min(pbar + shift, 0.5) : std::max(pbar - shift, 0.5);
  }
  return pbar * (1.0 - pbar);
}

// Core of w^(E): m gamma2^T G F^{-1} G gamma2.
double wald_E(const Matrix& y, const ProjectionPair& p, const EdgeFamily& family,
              const GlmFit& fit, ThetaTildeMode mode) {
  const Matrix& b = p.basis;
  const Index n = b.rows();
  const double m = static_cast<double>(y.cols());
  Vector wf(n), wg(n);
  if (family.kind == FamilyKind::gaussian) {
    wf.setOnes();
    wg.setOnes();
  } else {
    const Vector ybar = y.rowwise().mean();
    const Vector eta1 = b * fit.gamma1;
    for (Index i = 0; i < n; ++i) {
      const double pbar = 0.5 * (ybar(i) + ybar(n + i));
      wf(i) = theta_tilde_weight(pbar, mode, m);
      wg(i) = family.mean_derivative(eta1(i));
    }
  }
  const Matrix f_hat = 2.0 * (b.transpose() * wf.asDiagonal() * b);
  const Matrix g_hat = 2.0 * (b.transpose() * wg.asDiagonal() * b);
  Eigen::LDLT<Matrix> ldlt(f_hat);
  const double scale = f_hat.diagonal().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-13 * std::max(scale, 1e-300)) {
    throw NumericalError("F-hat is singular (pooled means at 0 or 1 on the projected pairs)");
  }
  const Vector gg = g_hat * fit.gamma2;
  const double w = m * gg.dot(ldlt.solve(gg));
  return std::max(w, 0.0);
}

}  // namespace

double ReferenceDistribution::sf(double x) const {
  if (kind == Kind::bootstrap) throw ArgumentError("bootstrap reference has no closed-form tail");
  return kind == Kind::chi2 ? numkit::chi2_sf(x, df1) : numkit::f_sf(x, df1, df2);
}

double ReferenceDistribution::quantile(double p) const {
  if (kind == Kind::bootstrap) throw ArgumentError("bootstrap reference has no closed-form quantile");
  return kind == Kind::chi2 ? numkit::chi2_quantile(df1, p) : numkit::f_quantile(df1, df2, p);
}

std::string ReferenceDistribution::describe() const {
  std::ostringstream os;
  if (kind == Kind::chi2) {
    os << "chi2(" << df1 << ")";
  } else if (kind == Kind::bootstrap) {
    os << "bootstrap(" << df1 << ")";
  } else {
    os << "F(" << df1 << "," << df2 << ")";
  }
  return os.str();
}

void TestReport::finalize() {
  if (!std::isfinite(statistic)) throw NumericalError("test statistic is not finite");
  p_value = std::clamp(ref.sf(statistic), 0.0, 1.0);
  reject = p_value < alpha;
}

ThetaTildeMode parse_theta_tilde_mode(const std::string& s) {
  if (s == "pooled_mean" || s == "pooled") return ThetaTildeMode::pooled_mean;
  if (s == "shrunk") return ThetaTildeMode::shrunk;
  throw ArgumentError("unknown theta-tilde mode '" + s + "' (expected pooled_mean or shrunk)");
}

DispersionEstimator parse_dispersion_estimator(const std::string& s) {
  if (s == "phi_hat1" || s == "1") return DispersionEstimator::phi_hat1;
  if (s == "phi_hat2" || s == "2") return DispersionEstimator::phi_hat2;
  throw ArgumentError("unknown dispersion estimator '" + s + "' (expected phi_hat1 or phi_hat2)");
}

GlmFit fit_two_group_glm(const Matrix& y, const ProjectionPair& p, const EdgeFamily& family,
                         double tol, int max_iter) {
  check_conformal(y, p);
  const Matrix& b = p.basis;
  const Index n = b.rows();
  const double m = static_cast<double>(y.cols());
  const Vector ysum = y.rowwise().sum();
  GlmFit fit;
  if (family.kind == FamilyKind::gaussian) {
    const Vector s1 = b.transpose() * ysum.head(n);
    const Vector s2 = b.transpose() * ysum.tail(n);
    fit.gamma1 = (s1 + s2) / (2.0 * m);
    fit.gamma2 = (s1 - s2) / (2.0 * m);
    fit.converged = true;
    return fit;
  }
  if (max_iter < 1) throw ArgumentError("max_iter must be positive");
  // The design is block orthogonal in (g1 + g2, g1 - g2), so the joint MLE
  // splits into one logistic fit per sample. Each half-tolerance guarantees the
  // joint score (sum and difference of the group scores) is below tol.
  const LogitGroupFit a = fit_logit_group(b, ysum.head(n), m, 0.5 * tol, max_iter);
  const LogitGroupFit c = fit_logit_group(b, ysum.tail(n), m, 0.5 * tol, max_iter);
  fit.gamma1 = 0.5 * (a.coef + c.coef);
  fit.gamma2 = 0.5 * (a.coef - c.coef);
  fit.converged = a.converged && c.converged;
  fit.iterations = std::max(a.iterations, c.iterations);
  fit.max_score = a.max_score + c.max_score;
  return fit;
}

double dispersion_phi_hat1(const Matrix& y, const ProjectionPair& p, const EdgeFamily& family,
                           const GlmFit& fit) {
  check_conformal(y, p);
  const Index n = p.basis.rows();
  const Index m = y.cols();
  const Index q = p.dimension();
  const double denom = 2.0 * static_cast<double>(n * m - q);
  if (denom <= 0.0) throw ArgumentError("phi_hat1 needs |S| m > q");
  const Vector eta = fitted_eta(p, fit);
  double total = 0.0;
  for (Index i = 0; i < 2 * n; ++i) {
    const double mu = family.mean(eta(i));
    const double v = family.mean_derivative(eta(i));
    for (Index k = 0; k < m; ++k) {
      const double r = y(i, k) - mu;
      total += r * r / v;
    }
  }
  return total / denom;
}

double dispersion_phi_hat2(const Matrix& y, const ProjectionPair& p, const EdgeFamily& family,
                           const GlmFit& fit) {
  check_conformal(y, p);
  const Index n = p.basis.rows();
  const double m = static_cast<double>(y.cols());
  const Index q = p.dimension();
  const double denom = 2.0 * static_cast<double>(n - q);
  if (denom <= 0.0) throw ArgumentError("phi_hat2 needs |S| > q");
  const Vector eta = fitted_eta(p, fit);
  const Vector ybar = y.rowwise().mean();
  double total = 0.0;
  for (Index i = 0; i < 2 * n; ++i) {
    const double r = ybar(i) - family.mean(eta(i));
    total += r * r / (family.mean_derivative(eta(i)) / m);
  }
  return total / denom;
}

TestReport stat_E(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                  ThetaTildeMode mode, double alpha) {
  check_alpha(alpha);
  const Matrix y = build_response(data, s);
  check_conformal(y, p);
  TestReport r = base_report("E", p, alpha);
  if (!data.family().dispersion_known) {
    r.notes.push_back("dispersion treated as 1; use EUD when it is unknown");
  }
  const GlmFit fit = fit_two_group_glm(y, p, data.family());
  r.statistic = wald_E(y, p, data.family(), fit, mode);
  r.ref = ReferenceDistribution::chi2(static_cast<double>(p.dimension()));
  r.finalize();
  return r;
}

TestReport stat_EUD(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                    DispersionEstimator est, ThetaTildeMode mode, double alpha) {
  check_alpha(alpha);
  const Matrix y = build_response(data, s);
  check_conformal(y, p);
  TestReport r = base_report("EUD", p, alpha);
  const GlmFit fit = fit_two_group_glm(y, p, data.family());
  const double phi = est == DispersionEstimator::phi_hat1
                         ? dispersion_phi_hat1(y, p, data.family(), fit)
                         : dispersion_phi_hat2(y, p, data.family(), fit);
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw NumericalError("estimated dispersion is not positive");
  }
  r.dispersion = phi;
  r.statistic = wald_E(y, p, data.family(), fit, mode) / phi;
  r.ref = ReferenceDistribution::chi2(static_cast<double>(p.dimension()));
  r.finalize();
  return r;
}

namespace {

// ||W^T Y 1||^2 with W = [B; -B] / sqrt(2).
double projected_contrast(const Matrix& y, const Matrix& b) {
  const Index n = b.rows();
  const Vector ysum = y.rowwise().sum();
  const Vector c = b.transpose() * (ysum.head(n) - ysum.tail(n)) / std::sqrt(2.0);
  return c.squaredNorm();
}

}  // namespace

TestReport stat_G(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                  double alpha) {
  check_alpha(alpha);
  if (data.family().kind != FamilyKind::gaussian) {
    throw ArgumentError("stat G requires the gaussian family");
  }
  const Matrix y = build_response(data, s);
  check_conformal(y, p);
  const Matrix& b = p.basis;
  const Index n = b.rows();
  const Index m = y.cols();
  const double nu1 = static_cast<double>(p.dimension());
  const double nu2 = 2.0 * static_cast<double>(n * m - p.dimension());
  if (nu2 <= 0.0) throw ArgumentError("stat G: nu2 = 2(|S| m - q) must be positive");

  // Residual of every layer against the projected pooled mean Q Q^T ybar.
  const Vector ybar = y.rowwise().mean();
  Vector fitted(2 * n);
  fitted.head(n) = b * (b.transpose() * ybar.head(n));
  fitted.tail(n) = b * (b.transpose() * ybar.tail(n));
  const double denom = (y.colwise() - fitted).squaredNorm();

  TestReport r = base_report("G", p, alpha);
  const double num = projected_contrast(y, b);
  if (denom <= 0.0) {
    if (num > 0.0) throw NumericalError("stat G: zero residual variance");
    r.statistic = 0.0;
  } else {
    r.statistic = nu2 * num / (nu1 * static_cast<double>(m) * denom);
  }
  r.ref = ReferenceDistribution::f(nu1, nu2);
  r.finalize();
  return r;
}

TestReport stat_GP(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                   double alpha) {
  check_alpha(alpha);
  if (data.family().kind != FamilyKind::gaussian) {
    throw ArgumentError("stat GP requires the gaussian family");
  }
  if (data.layers() < 2) throw ArgumentError("stat GP needs m > 1; use stat G when m = 1");
  const Matrix y = build_response(data, s);
  check_conformal(y, p);
  const Matrix& b = p.basis;
  const Index n = b.rows();
  const Index m = y.cols();
  const double nu1 = static_cast<double>(p.dimension());
  const double nu2 = 2.0 * static_cast<double>((m - 1) * p.dimension());

  Matrix proj(2 * p.dimension(), m);
  proj.topRows(p.dimension()) = b.transpose() * y.topRows(n);
  proj.bottomRows(p.dimension()) = b.transpose() * y.bottomRows(n);
  const double denom = (proj.colwise() - proj.rowwise().mean()).squaredNorm();

  TestReport r = base_report("GP", p, alpha);
  const double num = projected_contrast(y, b);
  if (denom <= 0.0) {
    if (num > 0.0) throw NumericalError("stat GP: zero within-group variance");
    r.statistic = 0.0;
  } else {
    r.statistic = nu2 * num / (nu1 * static_cast<double>(m) * denom);
  }
  r.ref = ReferenceDistribution::f(nu1, nu2);
  r.finalize();
  return r;
}

double ncp_psi(const Matrix& theta1, const Matrix& theta2, const HypothesisSet& s,
               const ProjectionPair& p, Index m, double sigma2) {
  if (!(sigma2 > 0.0)) throw ArgumentError("ncp_psi: sigma2 must be positive");
  if (m < 1) throw ArgumentError("ncp_psi: m must be positive");
  if (theta1.rows() != theta2.rows() || theta1.cols() != theta2.cols()) {
    throw ArgumentError("ncp_psi: parameter matrices differ in shape");
  }
  s.validate(theta1.rows());
  const auto pairs = s.response_pairs();
  if (static_cast<Index>(pairs.size()) != p.basis.rows()) {
    throw ArgumentError("ncp_psi: basis does not match the hypothesis set");
  }
  Vector diff(static_cast<Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    diff(static_cast<Index>(i)) =
        theta1(pairs[i].row, pairs[i].col) - theta2(pairs[i].row, pairs[i].col);
  }
  return static_cast<double>(m) / (2.0 * sigma2) * (p.basis.transpose() * diff).squaredNorm();
}

double power_oracle_GP(double psi, double nu1, double nu2p, double alpha) {
  check_alpha(alpha);
  if (!(psi >= 0.0)) throw ArgumentError("power_oracle_GP: psi must be non-negative");
  const double cut = numkit::f_quantile(nu1, nu2p, 1.0 - alpha);
  return 1.0 - numkit::noncentral_f_cdf(cut, nu1, nu2p, psi);
}

}  // namespace mesonet
