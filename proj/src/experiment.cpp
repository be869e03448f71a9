#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>
#include <variant>

#include "json.hpp"
#include "mesonet/competitors.hpp"
#include "mesonet/errors.hpp"
#include "mesonet/io.hpp"
#include "mesonet/projlearn.hpp"
#include "mesonet/simharness.hpp"

namespace mesonet {

using json = nlohmann::json;

std::string MethodSpec::display_label() const {
  if (!label.empty()) return label;
  const std::string dim = std::to_string(d);
  if (kind == "basic") return "Basic";
  if (kind == "blockproj") return "BlockProj";
  if (kind == "randproj") return "RandProj-" + dim;
  if (kind == "posn") return "Posn-" + dim;
  std::string base = learn == "oracle" ? "OrcProj" : learn == "impute" ? "ProjImp" : "Proj";
  if (stat != "auto") base += "[" + stat + "]";
  if (correction != "none") base += "+" + correction;
  return base + "-" + dim;
}

namespace {

ProjectionPair oracle_projection(const SimulatedSample& sample, const HypothesisSet& s, Index d) {
  if (!s.kronecker_compatible()) throw ArgumentError("oracle projection needs a directed rectangle");
  const Matrix diff = sample.theta1 - sample.theta2;
  Matrix block(s.row_count(), s.col_count());
  for (Index j = 0; j < s.col_count(); ++j) {
    for (Index i = 0; i < s.row_count(); ++i) block(i, j) = diff(s.rows()[i], s.cols()[j]);
  }
  if (block.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateSignalError("oracle projection undefined: parameters agree on S");
  }
  if (d > std::min(block.rows(), block.cols())) throw ArgumentError("oracle d exceeds min(r, c)");
  const numkit::SvdResult svd = numkit::svd_thin(block);
  ProjectionPair p = ProjectionPair::kronecker(svd.U.leftCols(d), svd.V.leftCols(d), "oracle");
  p.requested_dim = d;
  return p;
}

}  // namespace

TestReport apply_statistic(const std::string& stat, const std::string& dispersion,
                           const std::string& theta_tilde, const TwoSampleData& data,
                           const HypothesisSet& s, const ProjectionPair& p, double alpha) {
  const bool binary = data.family().binary();
  const ThetaTildeMode mode = theta_tilde == "auto"
                                  ? (binary ? ThetaTildeMode::shrunk : ThetaTildeMode::pooled_mean)
                                  : parse_theta_tilde_mode(theta_tilde);
  if (stat == "auto") return auto_stat(data, s, p, alpha);
  if (stat == "E") return stat_E(data, s, p, mode, alpha);
  if (stat == "EUD") {
    const DispersionEstimator est =
        dispersion == "auto" ? (binary ? DispersionEstimator::phi_hat2 : DispersionEstimator::phi_hat1)
                             : parse_dispersion_estimator(dispersion);
    return stat_EUD(data, s, p, est, mode, alpha);
  }
  if (stat == "G") return stat_G(data, s, p, alpha);
  if (stat == "GP") return stat_GP(data, s, p, alpha);
  throw ArgumentError("unknown statistic '" + stat + "' (expected auto, E, EUD, G or GP)");
}

ProjectionPair apply_correction(const ProjectionPair& p, const HypothesisSet& s,
                                const std::string& correction) {
  if (correction == "none") return p;
  if (correction == "density") return density_correct(p);
  if (correction == "degree") return degree_correct(p, s);
  throw ArgumentError("unknown correction '" + correction + "' (expected none, density or degree)");
}

namespace {

// Learned projections depend only on the sample and these settings, so methods
// that differ only in their statistic share one learning pass per replication.
using ProjCache = std::map<std::string, std::variant<ProjectionPair, std::string>>;

ProjectionPair method_projection(const MethodSpec& me, const SimulatedSample& sample,
                                 const HypothesisSet& s) {
  LearnOptions opt;
  opt.center = me.center;
  ProjectionPair p;
  if (me.learn == "rect") {
    p = learn_projections_rect(sample.data, s, me.d, opt);
  } else if (me.learn == "impute") {
    p = learn_projections_impute(sample.data, s, me.d, opt);
  } else if (me.learn == "oracle") {
    p = oracle_projection(sample, s, me.d);
  } else {
    throw ArgumentError("unknown projection learner '" + me.learn + "'");
  }
  return apply_correction(p, s, me.correction);
}

TestReport run_method_impl(const MethodSpec& me, const SimulatedSample& sample, const HypothesisSet& s,
                           double alpha, RandomStream& rng, ProjCache* cache) {
  const TwoSampleData& data = sample.data;
  if (me.kind == "basic") {
    return data.family().binary() ? basic_proportion_test(data, s, alpha)
                                  : basic_gaussian_f_test(data, s, alpha);
  }
  if (me.kind == "posn") {
    BootstrapOptions opt;
    opt.replicates = me.bootstrap;
    return position_bootstrap_test(data, s, me.d, rng, alpha, opt);
  }
  if (me.kind == "randproj") return random_projection_test(data, s, me.d, rng, alpha);
  if (me.kind == "blockproj") return block_projection_test(data, s, alpha);
  if (me.kind != "proj") throw ArgumentError("unknown method kind '" + me.kind + "'");

  ProjectionPair p;
  if (cache == nullptr) {
    p = method_projection(me, sample, s);
  } else {
    const std::string key = me.learn + "|" + std::to_string(me.d) + "|" + std::to_string(me.center) +
                            "|" + me.correction;
    auto it = cache->find(key);
    if (it == cache->end()) {
      try {
        it = cache->emplace(key, method_projection(me, sample, s)).first;
      } catch (const std::exception& e) {
        it = cache->emplace(key, std::string(e.what())).first;
      }
    }
    if (const auto* err = std::get_if<std::string>(&it->second)) throw NumericalError(*err);
    p = std::get<ProjectionPair>(it->second);
  }
  TestReport r = apply_statistic(me.stat, me.dispersion, me.theta_tilde, data, s, p, alpha);
  if (!data.family().binary() && sample.sigma2 > 0.0) {
    r.ncp_oracle = ncp_psi(sample.theta1, sample.theta2, s, p, data.layers(), sample.sigma2);
  }
  return r;
}

}  // namespace

TestReport run_method(const MethodSpec& me, const SimulatedSample& sample, const HypothesisSet& s,
                      double alpha, RandomStream& rng) {
  return run_method_impl(me, sample, s, alpha, rng, nullptr);
}

const RejectionRow& RejectionTable::find(const std::string& method, Index m) const {
  for (const auto& row : rows) {
    if (row.method == method && row.m == m) return row;
  }
  throw ArgumentError("no rejection-table row for " + method + " at m=" + std::to_string(m));
}

void RejectionTable::write_csv(std::ostream& os) const {
  os << "method,m,d_or_p,regime,rate,se,failures\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.method << ',' << r.m << ',' << r.d_or_p << ',' << r.regime << ',' << r.rate << ','
       << r.se << ',' << r.failures << '\n';
  }
}

std::string RejectionTable::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MESONET_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

ExperimentResult run_experiment(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.methods.empty()) throw ArgumentError("scenario lists no methods");
  const HypothesisSet s = cfg.hypothesis();
  const std::size_t n_methods = cfg.methods.size();
  const std::size_t n_tasks = cfg.ms.size() * static_cast<std::size_t>(cfg.reps);
  std::vector<ReplicationRecord> records(n_tasks * n_methods);

  auto run_task = [&](std::size_t task) {
    const std::size_t mi = task / static_cast<std::size_t>(cfg.reps);
    const int rep = static_cast<int>(task % static_cast<std::size_t>(cfg.reps));
    const Index m = cfg.ms[mi];
    // Streams depend only on (seed, m, rep, method): thread count never matters.
    const std::uint64_t key = (static_cast<std::uint64_t>(m) << 32) | static_cast<std::uint64_t>(rep);
    std::optional<SimulatedSample> sample;
    std::string gen_error;
    try {
      RandomStream data_rng = RandomStream::derive(cfg.seed, key, 0);
      sample.emplace(generate(cfg, m, data_rng));
    } catch (const std::exception& e) {
      gen_error = std::string("generator: ") + e.what();
    }
    ProjCache cache;
    for (std::size_t k = 0; k < n_methods; ++k) {
      ReplicationRecord& rec = records[task * n_methods + k];
      rec.m = m;
      rec.rep = rep;
      rec.method = k;
      if (!sample) {
        rec.failed = true;
        rec.error = gen_error;
        continue;
      }
      try {
        RandomStream rng = RandomStream::derive(cfg.seed, key, k + 1);
        const TestReport r = run_method_impl(cfg.methods[k], *sample, s, cfg.alpha, rng, &cache);
        rec.reject = r.reject;
        rec.p_value = r.p_value;
        rec.statistic = r.statistic;
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
      }
    }
  };

  const int threads = std::min<int>(resolve_threads(cfg.threads), static_cast<int>(n_tasks));
  if (threads <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) run_task(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  ExperimentResult out;
  for (std::size_t mi = 0; mi < cfg.ms.size(); ++mi) {
    for (std::size_t k = 0; k < n_methods; ++k) {
      RejectionRow row;
      row.method = cfg.methods[k].display_label();
      row.m = cfg.ms[mi];
      row.d_or_p = cfg.methods[k].d;
      row.regime = regime_name(cfg.regime);
      int rejections = 0;
      for (int rep = 0; rep < cfg.reps; ++rep) {
        const std::size_t task = mi * static_cast<std::size_t>(cfg.reps) + static_cast<std::size_t>(rep);
        const ReplicationRecord& rec = records[task * n_methods + k];
        if (rec.failed) {
          ++row.failures;
        } else {
          ++row.successes;
          rejections += rec.reject ? 1 : 0;
        }
      }
      if (row.successes > 0) {
        row.rate = static_cast<double>(rejections) / row.successes;
        row.se = std::sqrt(row.rate * (1.0 - row.rate) / row.successes);
      }
      out.table.rows.push_back(row);
    }
  }
  out.records = std::move(records);
  return out;
}

namespace {

std::vector<Index> json_indices(const json& j, const char* field) {
  if (j.is_string()) return io::parse_index_list(j.get<std::string>());
  if (j.is_array()) {
    std::vector<Index> out;
    for (const auto& v : j) {
      if (!v.is_number_integer() || v.get<long>() < 1) {
        throw ArgumentError(std::string("scenario field '") + field + "' needs 1-based integers");
      }
      out.push_back(v.get<Index>() - 1);
    }
    return out;
  }
  throw ArgumentError(std::string("scenario field '") + field + "' must be a range string or array");
}

std::string range_string(const std::vector<Index>& idx) {
  std::ostringstream os;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && idx[j + 1] == idx[j] + 1) ++j;
    if (i) os << ',';
    os << idx[i] + 1;
    if (j > i) os << ".." << idx[j] + 1;
    i = j + 1;
  }
  return os.str();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ArgumentError(std::string("scenario field '") + key + "' has the wrong type");
  }
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataFormatError(std::string("scenario JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataFormatError("scenario JSON must be an object");
  static const std::vector<std::string> known = {
      "generator", "n", "m", "reps", "sigma2", "latent_dim", "eta", "perturbation", "regime",
      "rows", "cols", "methods", "alpha", "seed", "threads"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ArgumentError("unknown scenario field '" + key + "'");
    }
  }
  ScenarioConfig c;
  c.generator = parse_generator(get_or<std::string>(j, "generator", "gaussian_ip"));
  c.n = get_or<Index>(j, "n", 100);
  if (j.contains("m")) {
    if (j["m"].is_array()) {
      c.ms = j["m"].get<std::vector<Index>>();
    } else {
      c.ms = {get_or<Index>(j, "m", 10)};
    }
  }
  c.reps = get_or<int>(j, "reps", 500);
  c.sigma2 = get_or<double>(j, "sigma2", 50.0);
  c.latent_dim = get_or<Index>(j, "latent_dim", 0);
  c.eta = get_or<double>(j, "eta", 1.0);
  if (j.contains("perturbation")) c.perturbation = get_or<double>(j, "perturbation", 0.0);
  c.regime = parse_regime(get_or<std::string>(j, "regime", "null"));
  if (j.contains("rows")) c.rows = json_indices(j["rows"], "rows");
  if (j.contains("cols")) c.cols = json_indices(j["cols"], "cols");
  c.alpha = get_or<double>(j, "alpha", 0.05);
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.threads = get_or<int>(j, "threads", 0);
  if (j.contains("methods")) {
    for (const auto& mj : j["methods"]) {
      MethodSpec me;
      me.kind = get_or<std::string>(mj, "kind", "proj");
      me.learn = get_or<std::string>(mj, "learn", "rect");
      me.stat = get_or<std::string>(mj, "stat", "auto");
      me.dispersion = get_or<std::string>(mj, "dispersion", "auto");
      me.theta_tilde = get_or<std::string>(mj, "theta_tilde", "auto");
      me.correction = get_or<std::string>(mj, "correction", "none");
      me.d = get_or<Index>(mj, "d", mj.contains("p") ? mj["p"].get<Index>() : 0);
      me.bootstrap = get_or<int>(mj, "bootstrap", 500);
      me.center = get_or<bool>(mj, "center", false);
      me.label = get_or<std::string>(mj, "label", "");
      c.methods.push_back(me);
    }
  }
  c.validate();
  return c;
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["generator"] = generator_name(c.generator);
  j["n"] = c.n;
  j["m"] = c.ms;
  j["reps"] = c.reps;
  j["sigma2"] = c.sigma2;
  j["latent_dim"] = c.latent_dimension();
  j["eta"] = c.eta;
  j["perturbation"] = c.perturbation_sd();
  j["regime"] = regime_name(c.regime);
  const HypothesisSet s = c.hypothesis();
  j["rows"] = range_string(s.rows());
  j["cols"] = range_string(s.cols());
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["methods"] = json::array();
  for (const auto& me : c.methods) {
    j["methods"].push_back({{"kind", me.kind},
                            {"learn", me.learn},
                            {"stat", me.stat},
                            {"dispersion", me.dispersion},
                            {"theta_tilde", me.theta_tilde},
                            {"correction", me.correction},
                            {"d", me.d},
                            {"bootstrap", me.bootstrap},
                            {"center", me.center},
                            {"label", me.display_label()}});
  }
  return j.dump(2);
}

}  // namespace mesonet
