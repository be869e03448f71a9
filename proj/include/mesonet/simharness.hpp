#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mesonet/netmodel.hpp"
#include "mesonet/rng.hpp"
#include "mesonet/stattests.hpp"

namespace mesonet {

enum class GeneratorKind { gaussian_ip, gaussian_dist, logit_ip, logit_overdispersed };
enum class Regime { null, alternative };

GeneratorKind parse_generator(const std::string& s);
std::string generator_name(GeneratorKind g);
Regime parse_regime(const std::string& s);
std::string regime_name(Regime r);

/// One method evaluated per replication.
///   kind: proj | basic | posn | randproj | blockproj
///   learn (proj only): rect | impute | oracle
///   stat (proj/randproj/blockproj): auto | E | EUD | G | GP
struct MethodSpec {
  std::string kind = "proj";
  std::string learn = "rect";
  std::string stat = "auto";
  std::string dispersion = "auto";  // EUD: phi_hat1, phi_hat2, or auto (phi_hat2 for binary)
  std::string theta_tilde = "auto"; // E/EUD: pooled_mean, shrunk, or auto (shrunk for binary)
  std::string correction = "none";  // none | density | degree
  Index d = 0;                      // projection dimension, or p for posn
  int bootstrap = 500;
  bool center = false;
  std::string label;

  std::string display_label() const;
};

struct ScenarioConfig {
  GeneratorKind generator = GeneratorKind::gaussian_ip;
  Index n = 100;
  std::vector<Index> ms{10};
  int reps = 500;
  double sigma2 = 50.0;
  Index latent_dim = 0;                 // 0: generator default (3, or 2 for logit)
  double eta = 1.0;                     // overdispersion
  std::optional<double> perturbation;   // standard deviation; generator default when unset
  Regime regime = Regime::null;
  std::vector<Index> rows;              // 0-based; default rows 0..19
  std::vector<Index> cols;              // 0-based; default cols n-30..n-1
  std::vector<MethodSpec> methods;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 0;                      // 0: MESONET_THREADS or hardware concurrency

  Index latent_dimension() const;
  double perturbation_sd() const;
  HypothesisSet hypothesis() const;
  void validate() const;
};

/// One replication's parameters and data.
struct SimulatedSample {
  TwoSampleData data;
  Matrix theta1;  // natural parameters (link scale)
  Matrix theta2;
  double sigma2 = 0.0;  // gaussian edge variance; 0 for binary data
};

SimulatedSample gen_gaussian_ip(const ScenarioConfig& cfg, Index m, RandomStream& rng);
SimulatedSample gen_gaussian_dist(const ScenarioConfig& cfg, Index m, RandomStream& rng);
SimulatedSample gen_logit_ip(const ScenarioConfig& cfg, Index m, RandomStream& rng);
SimulatedSample gen_overdispersed(const ScenarioConfig& cfg, Index m, RandomStream& rng);
SimulatedSample generate(const ScenarioConfig& cfg, Index m, RandomStream& rng);

/// Layer sum of one (g, i, j) triple: Binomial(m, Beta(...)), spread over a
/// uniformly random subset of layers. eta = 1 gives plain Bernoulli layers.
std::vector<int> overdispersed_layers(double prob, Index m, double eta, RandomStream& rng);

/// Statistic by name (auto, E, EUD, G, GP). "auto" dispersion picks phi_hat2
/// for binary data; "auto" theta_tilde picks shrunk pooled means for binary data.
TestReport apply_statistic(const std::string& stat, const std::string& dispersion,
                           const std::string& theta_tilde, const TwoSampleData& data,
                           const HypothesisSet& s, const ProjectionPair& p, double alpha);

/// none, density or degree.
ProjectionPair apply_correction(const ProjectionPair& p, const HypothesisSet& s,
                                const std::string& correction);

/// Runs one configured method on one replication.
TestReport run_method(const MethodSpec& method, const SimulatedSample& sample,
                      const HypothesisSet& s, double alpha, RandomStream& rng);

struct RejectionRow {
  std::string method;
  Index m = 0;
  Index d_or_p = 0;
  std::string regime;
  double rate = 0.0;
  double se = 0.0;
  int failures = 0;
  int successes = 0;
};

struct RejectionTable {
  std::vector<RejectionRow> rows;

  const RejectionRow& find(const std::string& method, Index m) const;
  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
};

struct ReplicationRecord {
  Index m = 0;
  int rep = 0;
  std::size_t method = 0;
  bool failed = false;
  bool reject = false;
  double p_value = 1.0;
  double statistic = 0.0;
  std::string error;
};

struct ExperimentResult {
  RejectionTable table;
  std::vector<ReplicationRecord> records;  // ordered by (m, rep, method)
};

/// Deterministic for a fixed config and seed, independent of thread count.
ExperimentResult run_experiment(const ScenarioConfig& cfg);

/// Worker count: explicit value, else MESONET_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/// JSON round trip of a scenario (1-based indices in JSON).
ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg);

}  // namespace mesonet
