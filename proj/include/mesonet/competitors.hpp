#pragma once

#include <utility>

#include "mesonet/netmodel.hpp"
#include "mesonet/rng.hpp"
#include "mesonet/stattests.hpp"

namespace mesonet {

/// Pooled two-sample F test on the |S| raw coordinates (m > 1).
TestReport basic_gaussian_f_test(const TwoSampleData& data, const HypothesisSet& s,
                                 double alpha = 0.05);

/// Sum over pairs of uncorrected two-proportion z^2, referred to chi2(|S|).
/// With m = 1 the test is trivial and never rejects.
TestReport basic_proportion_test(const TwoSampleData& data, const HypothesisSet& s,
                                 double alpha = 0.05);

struct AdmmOptions {
  double rho = 1.0;
  double tol = 1e-6;
  int max_iter = 500;
};

struct AdmmResult {
  Matrix theta1;  // rank-d z iterate of sample 1
  Matrix theta2;
  bool converged = false;
  int iterations = 0;
  double s_gap_l1 = 0.0;  // ||[z1]_S - [z2]_S||_1 at exit
  double objective = 0.0;
};

/// Rank-d fits of the two mean matrices constrained to agree on S.
AdmmResult admm_constrained(const Matrix& abar1, const Matrix& abar2, const HypothesisSet& s,
                            Index d, const AdmmOptions& opt = {});

/// sum_g ||Abar_g - Theta_g||_F^2, the objective minimised by admm_constrained.
double admm_objective(const Matrix& abar1, const Matrix& abar2, const Matrix& theta1,
                      const Matrix& theta2);

struct BootstrapOptions {
  int replicates = 500;
  // The verbatim iteration oscillates at rho = 1 on noisy means; rho = 3
  // converges on the simulation settings.
  AdmmOptions admm{3.0, 1e-6, 500};
};

/// Posn-p: ||[Theta1]_S - [Theta2]_S||_F from rank-p truncations of the layer
/// means, calibrated by a parametric bootstrap from the constrained null fit.
TestReport position_bootstrap_test(const TwoSampleData& data, const HypothesisSet& s, Index p,
                                   RandomStream& rng, double alpha = 0.05,
                                   const BootstrapOptions& opt = {});

/// Haar-random pair (U, V) for a directed rectangle, else a Haar basis with
/// min(d^2, p) columns.
ProjectionPair random_projection(const HypothesisSet& s, Index d, RandomStream& rng);
/// Constant projections U = 1_r / sqrt(r), V = 1_c / sqrt(c).
ProjectionPair block_projection(const HypothesisSet& s);

/// Haar-random projections fed to GP (gaussian, m > 1), G (gaussian, m = 1)
/// or E (logit).
TestReport random_projection_test(const TwoSampleData& data, const HypothesisSet& s, Index d,
                                  RandomStream& rng, double alpha = 0.05);

/// Constant projections U = 1_r / sqrt(r), V = 1_c / sqrt(c).
TestReport block_projection_test(const TwoSampleData& data, const HypothesisSet& s,
                                 double alpha = 0.05);

/// Statistic matching the family and m: GP, G or E (shrunk pooled means).
TestReport auto_stat(const TwoSampleData& data, const HypothesisSet& s, const ProjectionPair& p,
                     double alpha = 0.05);

}  // namespace mesonet
