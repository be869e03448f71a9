#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mesonet/netmodel.hpp"

namespace mesonet {

/// Coefficients of the working two-group GLM with design 1_m kron [[B, B], [B, -B]].
struct GlmFit {
  Vector gamma1;
  Vector gamma2;
  bool converged = false;
  int iterations = 0;
  double max_score = 0.0;
};

struct ReferenceDistribution {
  enum class Kind { chi2, f, bootstrap };
  Kind kind = Kind::chi2;
  double df1 = 1.0;
  double df2 = 0.0;  // unused for chi2

  static ReferenceDistribution chi2(double df) { return {Kind::chi2, df, 0.0}; }
  static ReferenceDistribution f(double nu1, double nu2) { return {Kind::f, nu1, nu2}; }
  /// Empirical null from `replicates` parametric bootstrap draws.
  static ReferenceDistribution bootstrap(int replicates) {
    return {Kind::bootstrap, static_cast<double>(replicates), 0.0};
  }
  double sf(double x) const;
  double quantile(double p) const;
  std::string describe() const;
};

struct TestReport {
  std::string method;
  double statistic = 0.0;
  ReferenceDistribution ref;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  std::optional<double> ncp_oracle;
  std::optional<double> dispersion;
  Index effective_dim = 0;
  Index requested_dim = 0;
  bool padded = false;
  std::string provenance = "fixed";
  std::vector<std::string> notes;

  /// Sets p_value and reject from the reference distribution.
  void finalize();
};

enum class ThetaTildeMode { pooled_mean, shrunk };
enum class DispersionEstimator { phi_hat1, phi_hat2 };

ThetaTildeMode parse_theta_tilde_mode(const std::string& s);
DispersionEstimator parse_dispersion_estimator(const std::string& s);

/// Gaussian: closed form. Logit: Newton/IRLS from zero with step halving;
/// converged once the largest absolute score falls below `tol`. Throws
/// NumericalError when it cannot converge.
GlmFit fit_two_group_glm(const Matrix& y, const ProjectionPair& p, const EdgeFamily& family,
                         double tol = 1e-10, int max_iter = 100);

TestReport stat_E(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                  ThetaTildeMode mode = ThetaTildeMode::pooled_mean, double alpha = 0.05);

TestReport stat_EUD(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                    DispersionEstimator est = DispersionEstimator::phi_hat1,
                    ThetaTildeMode mode = ThetaTildeMode::pooled_mean, double alpha = 0.05);

/// Works for m = 1; p-value from the central F (conservative under the null).
TestReport stat_G(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                  double alpha = 0.05);

/// Requires m > 1; exact F null.
TestReport stat_GP(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                   double alpha = 0.05);

/// Dispersion estimates used by stat_EUD, exposed for checking.
double dispersion_phi_hat1(const Matrix& y, const ProjectionPair& p, const EdgeFamily& family,
                           const GlmFit& fit);
double dispersion_phi_hat2(const Matrix& y, const ProjectionPair& p, const EdgeFamily& family,
                           const GlmFit& fit);

/// (m / 2 sigma^2) ||B^T (theta1 - theta2)_S||^2 for n x n parameter matrices.
double ncp_psi(const Matrix& theta1, const Matrix& theta2, const HypothesisSet& s,
               const ProjectionPair& p, Index m, double sigma2);

/// 1 - ncF_cdf(F_{nu1,nu2p,1-alpha}; nu1, nu2p, psi).
double power_oracle_GP(double psi, double nu1, double nu2p, double alpha = 0.05);

}  // namespace mesonet
