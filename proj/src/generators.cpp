#include <algorithm>
#include <cmath>
#include <numeric>

#include "mesonet/errors.hpp"
#include "mesonet/simharness.hpp"

namespace mesonet {

GeneratorKind parse_generator(const std::string& s) {
  if (s == "gaussian_ip") return GeneratorKind::gaussian_ip;
  if (s == "gaussian_dist") return GeneratorKind::gaussian_dist;
  if (s == "logit_ip") return GeneratorKind::logit_ip;
  if (s == "logit_overdispersed" || s == "overdispersed") return GeneratorKind::logit_overdispersed;
  throw ArgumentError("unknown generator '" + s + "'");
}

std::string generator_name(GeneratorKind g) {
  switch (g) {
    case GeneratorKind::gaussian_ip: return "gaussian_ip";
    case GeneratorKind::gaussian_dist: return "gaussian_dist";
    case GeneratorKind::logit_ip: return "logit_ip";
    case GeneratorKind::logit_overdispersed: return "logit_overdispersed";
  }
  return "?";
}

Regime parse_regime(const std::string& s) {
  if (s == "null") return Regime::null;
  if (s == "alternative" || s == "alt") return Regime::alternative;
  throw ArgumentError("unknown regime '" + s + "' (expected null or alternative)");
}

std::string regime_name(Regime r) { return r == Regime::null ? "null" : "alternative"; }

Index ScenarioConfig::latent_dimension() const {
  if (latent_dim > 0) return latent_dim;
  return (generator == GeneratorKind::logit_ip || generator == GeneratorKind::logit_overdispersed)
             ? 2
             : 3;
}

double ScenarioConfig::perturbation_sd() const {
  if (perturbation) return *perturbation;
  switch (generator) {
    case GeneratorKind::gaussian_ip: return 1.0 / (3.0 * std::sqrt(2.0));
    case GeneratorKind::gaussian_dist: return std::sqrt(2.0) / 3.0;
    case GeneratorKind::logit_ip:
    case GeneratorKind::logit_overdispersed: return 1.0 / (4.0 * std::sqrt(2.0));
  }
  return 0.0;
}

HypothesisSet ScenarioConfig::hypothesis() const {
  std::vector<Index> r = rows;
  std::vector<Index> c = cols;
  if (r.empty()) {
    r.resize(static_cast<std::size_t>(std::min<Index>(20, n)));
    std::iota(r.begin(), r.end(), 0);
  }
  if (c.empty()) {
    const Index k = std::min<Index>(30, n);
    for (Index j = n - k; j < n; ++j) c.push_back(j);
  }
  return HypothesisSet::rectangle(r, c);
}

void ScenarioConfig::validate() const {
  if (n < 2) throw ArgumentError("scenario: n must be at least 2");
  if (reps < 1) throw ArgumentError("scenario: reps must be at least 1");
  if (ms.empty()) throw ArgumentError("scenario: at least one m is required");
  for (Index m : ms) {
    if (m < 1) throw ArgumentError("scenario: m must be positive");
    if (generator == GeneratorKind::logit_overdispersed && eta != 1.0 &&
        !(eta > 1.0 && eta < static_cast<double>(m))) {
      throw ArgumentError("scenario: eta must lie in [1, m) for every m");
    }
  }
  if (!(sigma2 >= 0.0)) throw ArgumentError("scenario: sigma2 must be non-negative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("scenario: alpha must lie in (0, 1)");
  if (perturbation && !(*perturbation >= 0.0)) {
    throw ArgumentError("scenario: perturbation must be non-negative");
  }
  hypothesis().validate(n);
  for (const auto& me : methods) {
    if ((me.kind == "proj" || me.kind == "randproj" || me.kind == "posn") && me.d < 1) {
      throw ArgumentError("scenario: method '" + me.display_label() + "' needs d (or p) >= 1");
    }
  }
}

namespace {

struct Positions {
  Matrix x1, x2, y1, y2;
};

Matrix gaussian_matrix(Index rows, Index cols, RandomStream& rng) {
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
  }
  return out;
}

// Rows of X tied to S rows and rows of Y tied to S cols are shared across
// samples (null) or shared plus independent N(0, c^2 I) noise (alternative).
Positions draw_positions(const ScenarioConfig& cfg, RandomStream& rng) {
  const Index n = cfg.n;
  const Index k = cfg.latent_dimension();
  const HypothesisSet s = cfg.hypothesis();
  Positions p;
  p.x1 = gaussian_matrix(n, k, rng);
  p.x2 = gaussian_matrix(n, k, rng);
  p.y1 = gaussian_matrix(n, k, rng);
  p.y2 = gaussian_matrix(n, k, rng);
  const double c = cfg.regime == Regime::alternative ? cfg.perturbation_sd() : 0.0;
  for (Index i : s.rows()) {
    p.x2.row(i) = p.x1.row(i);
    if (c > 0.0) {
      for (Index a = 0; a < k; ++a) p.x2(i, a) += c * rng.normal();
    }
  }
  for (Index j : s.cols()) {
    p.y2.row(j) = p.y1.row(j);
    if (c > 0.0) {
      for (Index a = 0; a < k; ++a) p.y2(j, a) += c * rng.normal();
    }
  }
  return p;
}

Matrix distance_matrix(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows(), y.rows());
  for (Index j = 0; j < y.rows(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) out(i, j) = (x.row(i) - y.row(j)).norm();
  }
  return out;
}

std::vector<Matrix> gaussian_layers(const Matrix& theta, Index m, double sigma, RandomStream& rng) {
  std::vector<Matrix> layers;
  layers.reserve(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) {
    Matrix a(theta.rows(), theta.cols());
    for (Index j = 0; j < a.cols(); ++j) {
      for (Index i = 0; i < a.rows(); ++i) a(i, j) = theta(i, j) + sigma * rng.normal();
    }
    layers.push_back(std::move(a));
  }
  return layers;
}

std::vector<Matrix> binary_layers(const Matrix& theta, Index m, double eta, RandomStream& rng) {
  const EdgeFamily fam = EdgeFamily::logit();
  std::vector<Matrix> layers(static_cast<std::size_t>(m), Matrix::Zero(theta.rows(), theta.cols()));
  for (Index j = 0; j < theta.cols(); ++j) {
    for (Index i = 0; i < theta.rows(); ++i) {
      const double prob = fam.mean(theta(i, j));
      if (eta == 1.0) {
        for (Index k = 0; k < m; ++k) layers[static_cast<std::size_t>(k)](i, j) = rng.bernoulli(prob);
      } else {
        const std::vector<int> v = overdispersed_layers(prob, m, eta, rng);
        for (Index k = 0; k < m; ++k) layers[static_cast<std::size_t>(k)](i, j) = v[static_cast<std::size_t>(k)];
      }
    }
  }
  return layers;
}

SimulatedSample assemble(Matrix theta1, Matrix theta2, std::vector<Matrix> l1, std::vector<Matrix> l2,
                         EdgeFamily fam, double sigma2 = 0.0) {
  return SimulatedSample{TwoSampleData(NetworkStack(std::move(l1)), NetworkStack(std::move(l2)), fam),
                         std::move(theta1), std::move(theta2), sigma2};
}

}  // namespace

std::vector<int> overdispersed_layers(double prob, Index m, double eta, RandomStream& rng) {
  if (m < 1) throw ArgumentError("overdispersed layers need m >= 1");
  if (!(eta >= 1.0) || (eta != 1.0 && !(eta < static_cast<double>(m)))) {
    throw ArgumentError("overdispersion eta must lie in [1, m)");
  }
  std::vector<int> out(static_cast<std::size_t>(m), 0);
  if (eta == 1.0) {
    for (auto& v : out) v = rng.bernoulli(prob) ? 1 : 0;
    return out;
  }
  const double scale = (static_cast<double>(m) - eta) / (eta - 1.0);
  double b = prob;
  if (prob > 0.0 && prob < 1.0) b = rng.beta(prob * scale, (1.0 - prob) * scale);
  const int total = rng.binomial(static_cast<int>(m), b);
  // Partial Fisher-Yates: the first `total` slots of a random permutation.
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  for (int t = 0; t < total; ++t) {
    const auto span = static_cast<std::uint64_t>(m - t);
    const auto pick = static_cast<std::size_t>(t) + static_cast<std::size_t>(rng.next_u64() % span);
    std::swap(idx[static_cast<std::size_t>(t)], idx[pick]);
    out[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])] = 1;
  }
  return out;
}

SimulatedSample gen_gaussian_ip(const ScenarioConfig& cfg, Index m, RandomStream& rng) {
  const Positions p = draw_positions(cfg, rng);
  Matrix t1 = p.x1 * p.y1.transpose();
  Matrix t2 = p.x2 * p.y2.transpose();
  const double sigma = std::sqrt(cfg.sigma2);
  auto l1 = gaussian_layers(t1, m, sigma, rng);
  auto l2 = gaussian_layers(t2, m, sigma, rng);
  return assemble(std::move(t1), std::move(t2), std::move(l1), std::move(l2), EdgeFamily::gaussian(),
                  cfg.sigma2);
}

SimulatedSample gen_gaussian_dist(const ScenarioConfig& cfg, Index m, RandomStream& rng) {
  const Positions p = draw_positions(cfg, rng);
  Matrix t1 = distance_matrix(p.x1, p.y1);
  Matrix t2 = distance_matrix(p.x2, p.y2);
  const double sigma = std::sqrt(cfg.sigma2);
  auto l1 = gaussian_layers(t1, m, sigma, rng);
  auto l2 = gaussian_layers(t2, m, sigma, rng);
  return assemble(std::move(t1), std::move(t2), std::move(l1), std::move(l2), EdgeFamily::gaussian(),
                  cfg.sigma2);
}

SimulatedSample gen_logit_ip(const ScenarioConfig& cfg, Index m, RandomStream& rng) {
  const Positions p = draw_positions(cfg, rng);
  Matrix t1 = p.x1 * p.y1.transpose();
  Matrix t2 = p.x2 * p.y2.transpose();
  auto l1 = binary_layers(t1, m, 1.0, rng);
  auto l2 = binary_layers(t2, m, 1.0, rng);
  return assemble(std::move(t1), std::move(t2), std::move(l1), std::move(l2), EdgeFamily::logit());
}

SimulatedSample gen_overdispersed(const ScenarioConfig& cfg, Index m, RandomStream& rng) {
  if (cfg.eta != 1.0 && !(cfg.eta > 1.0 && cfg.eta < static_cast<double>(m))) {
    throw ArgumentError("overdispersion eta must lie in [1, m)");
  }
  const Positions p = draw_positions(cfg, rng);
  Matrix t1 = p.x1 * p.y1.transpose();
  Matrix t2 = p.x2 * p.y2.transpose();
  auto l1 = binary_layers(t1, m, cfg.eta, rng);
  auto l2 = binary_layers(t2, m, cfg.eta, rng);
  return assemble(std::move(t1), std::move(t2), std::move(l1), std::move(l2), EdgeFamily::logit());
}

SimulatedSample generate(const ScenarioConfig& cfg, Index m, RandomStream& rng) {
  switch (cfg.generator) {
    case GeneratorKind::gaussian_ip: return gen_gaussian_ip(cfg, m, rng);
    case GeneratorKind::gaussian_dist: return gen_gaussian_dist(cfg, m, rng);
    case GeneratorKind::logit_ip: return gen_logit_ip(cfg, m, rng);
    case GeneratorKind::logit_overdispersed: return gen_overdispersed(cfg, m, rng);
  }
  throw ArgumentError("unknown generator");
}

}  // namespace mesonet
