// mesonet command-line tool: test, learn-proj, simulate, power, replay.
//
// Every command writes a run manifest (argv, resolved configuration, seed,
// input and output digests). `replay` reruns a manifest and checks that the
// outputs come out byte-identical.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mesonet/competitors.hpp"
#include "mesonet/errors.hpp"
#include "mesonet/io.hpp"
#include "mesonet/projlearn.hpp"
#include "mesonet/simharness.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mesonet;

namespace {

enum Exit { ok = 0, mismatch = 1, bad_args = 2, bad_data = 3, numerical = 4 };

struct Output {
  std::string label;
  std::string path;  // empty: stdout
  std::string content;
};

struct RunResult {
  std::vector<Output> outputs;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> warnings;
  json inputs = json::array();
};

std::string digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void record_input(RunResult& r, const std::string& flag, const std::string& path) {
  r.inputs.push_back({{"flag", flag}, {"path", path}, {"digest", digest(slurp(path))}});
}

// Rethrows with the offending flag named in the message.
template <typename F>
auto for_flag(const std::string& flag, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DataFormatError& e) {
    throw DataFormatError(flag + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ArgumentError(flag + ": " + e.what());
  }
}

std::string matrix_csv(const Matrix& m) {
  std::ostringstream os;
  io::write_matrix_csv(os, m);
  return os.str();
}

// ---------------------------------------------------------------- shared data options

struct DataOptions {
  std::string sample1, sample2;
  std::string family = "gaussian";
  std::string hypothesis;
  bool undirected = false;
  bool no_diagonal = false;
};

void add_data_options(CLI::App* app, DataOptions& o) {
  app->add_option("--sample1,-1", o.sample1, "Stack file of sample 1 (header 'n m')")->required();
  app->add_option("--sample2,-2", o.sample2, "Stack file of sample 2")->required();
  app->add_option("--family", o.family, "Edge family")
      ->check(CLI::IsMember({"gaussian", "logit"}));
  app->add_option("--hypothesis", o.hypothesis,
                  "Rectangle 'rows=a..b,cols=c..d' (1-based) or a pair-list file")
      ->required();
  app->add_flag("--undirected", o.undirected, "Treat networks and S as undirected");
  app->add_flag("--no-diagonal", o.no_diagonal, "Drop self-pairs from S");
}

HypothesisSet load_hypothesis(const DataOptions& o, RunResult& r) {
  return for_flag("--hypothesis", [&] {
    const bool diag = !o.no_diagonal;
    if (o.hypothesis.rfind("rows=", 0) == 0 || o.hypothesis.rfind("cols=", 0) == 0) {
      auto [rows, cols] = io::parse_rect_spec(o.hypothesis);
      return HypothesisSet::rectangle(rows, cols, !o.undirected, diag);
    }
    record_input(r, "--hypothesis", o.hypothesis);
    return HypothesisSet::from_pairs(io::read_pair_list_file(o.hypothesis), !o.undirected, diag);
  });
}

TwoSampleData load_data(const DataOptions& o, RunResult& r) {
  NetworkStack s1 = for_flag("--sample1", [&] { return io::read_stack_file(o.sample1); });
  NetworkStack s2 = for_flag("--sample2", [&] { return io::read_stack_file(o.sample2); });
  record_input(r, "--sample1", o.sample1);
  record_input(r, "--sample2", o.sample2);
  return for_flag("--sample2", [&] {
    return TwoSampleData(std::move(s1), std::move(s2), EdgeFamily::parse(o.family));
  });
}

json data_config(const DataOptions& o, const TwoSampleData& data, const HypothesisSet& s) {
  return {{"sample1", o.sample1},       {"sample2", o.sample2},
          {"family", o.family},         {"hypothesis", o.hypothesis},
          {"undirected", o.undirected}, {"include_diagonal", !o.no_diagonal},
          {"n", data.nodes()},          {"m", data.layers()},
          {"hypothesis_size", s.size()}};
}

// ---------------------------------------------------------------- projection options

struct ProjOptions {
  std::string proj = "learned-rect";
  Index d = 0;
  std::optional<Index> d_star;
  std::string trim = "third";
  bool center = false;
  std::string u_file, v_file, basis_file;
  std::string correction = "none";
};

void add_proj_options(CLI::App* app, ProjOptions& o, bool allow_fixed) {
  std::vector<std::string> kinds = {"learned-rect", "learned-impute"};
  if (allow_fixed) kinds.insert(kinds.end(), {"random", "block", "file"});
  app->add_option("--proj", o.proj, "Projection source")->check(CLI::IsMember(kinds));
  app->add_option("--d", o.d, "Projection dimension")->check(CLI::PositiveNumber);
  app->add_option("--d-star", o.d_star, "Truncation rank of the held-out D block (default d)");
  app->add_option("--trim", o.trim, "Logit trimming bound for binary data")
      ->check(CLI::IsMember({"third", "unit"}));
  app->add_flag("--center", o.center, "Subtract the observed mean before imputation");
  app->add_option("--correction", o.correction, "Projection correction")
      ->check(CLI::IsMember({"none", "density", "degree"}));
  if (allow_fixed) {
    app->add_option("--u", o.u_file, "CSV of U (r x d_r) for --proj file");
    app->add_option("--v", o.v_file, "CSV of V (c x d_c) for --proj file");
    app->add_option("--basis", o.basis_file, "CSV basis (p x q) for --proj file on general sets");
  }
}

LearnOptions learn_options(const ProjOptions& o) {
  LearnOptions lo;
  lo.d_star = o.d_star;
  lo.trim = parse_trim_bound(o.trim);
  lo.center = o.center;
  return lo;
}

ProjectionPair build_projection(const ProjOptions& o, const TwoSampleData& data,
                                const HypothesisSet& s, std::uint64_t seed, RunResult& r) {
  const bool needs_d = o.proj == "learned-rect" || o.proj == "learned-impute" || o.proj == "random";
  if (needs_d && o.d < 1) throw ArgumentError("--d: required for --proj " + o.proj);
  ProjectionPair p;
  if (o.proj == "learned-rect") {
    p = for_flag("--proj", [&] { return learn_projections_rect(data, s, o.d, learn_options(o)); });
  } else if (o.proj == "learned-impute") {
    p = for_flag("--proj", [&] { return learn_projections_impute(data, s, o.d, learn_options(o)); });
  } else if (o.proj == "random") {
    RandomStream rng = RandomStream::derive(seed, 0, 0);
    p = for_flag("--d", [&] { return random_projection(s, o.d, rng); });
  } else if (o.proj == "block") {
    p = block_projection(s);
  } else {
    if (!o.basis_file.empty()) {
      record_input(r, "--basis", o.basis_file);
      p = ProjectionPair::general(for_flag("--basis", [&] { return io::read_matrix_csv_file(o.basis_file); }),
                                  "file");
      if (p.basis.rows() != static_cast<Index>(s.response_pairs().size())) {
        throw ArgumentError("--basis: row count must equal the number of response pairs (" +
                            std::to_string(s.response_pairs().size()) + ")");
      }
    } else {
      if (o.u_file.empty() || o.v_file.empty()) {
        throw ArgumentError("--proj file: needs --u and --v, or --basis");
      }
      if (!s.kronecker_compatible()) {
        throw ArgumentError("--u/--v: need a directed rectangle; use --basis for other sets");
      }
      record_input(r, "--u", o.u_file);
      record_input(r, "--v", o.v_file);
      const Matrix u = for_flag("--u", [&] { return io::read_matrix_csv_file(o.u_file); });
      const Matrix v = for_flag("--v", [&] { return io::read_matrix_csv_file(o.v_file); });
      if (u.rows() != s.row_count()) throw ArgumentError("--u: expected " + std::to_string(s.row_count()) + " rows");
      if (v.rows() != s.col_count()) throw ArgumentError("--v: expected " + std::to_string(s.col_count()) + " rows");
      p = ProjectionPair::kronecker(u, v, "file");
    }
    for_flag("--proj", [&] { p.validate(); return 0; });
    p.requested_dim = p.is_kronecker() ? p.left->cols() : p.dimension();
  }
  p = for_flag("--correction", [&] { return apply_correction(p, s, o.correction); });
  if (p.padded) {
    r.warnings.push_back("requested d exceeds the rank of the held-out signal; basis was padded");
  }
  return p;
}

json proj_config(const ProjOptions& o) {
  json j = {{"proj", o.proj}, {"d", o.d}, {"trim", o.trim}, {"center", o.center},
            {"correction", o.correction}};
  j["d_star"] = o.d_star ? json(*o.d_star) : json(nullptr);
  if (o.proj == "file") j["files"] = {{"u", o.u_file}, {"v", o.v_file}, {"basis", o.basis_file}};
  return j;
}

json report_json(const TestReport& t, const TwoSampleData& data, const HypothesisSet& s) {
  json j;
  j["method"] = t.method;
  j["statistic"] = t.statistic;
  j["reference"] = t.ref.describe();
  j["df1"] = t.ref.kind == ReferenceDistribution::Kind::bootstrap ? json(nullptr) : json(t.ref.df1);
  j["df2"] = t.ref.kind == ReferenceDistribution::Kind::f ? json(t.ref.df2) : json(nullptr);
  j["p_value"] = t.p_value;
  j["reject"] = t.reject;
  j["alpha"] = t.alpha;
  j["effective_dim"] = t.effective_dim;
  j["requested_dim"] = t.requested_dim;
  j["padded"] = t.padded;
  j["provenance"] = t.provenance;
  j["dispersion"] = t.dispersion ? json(*t.dispersion) : json(nullptr);
  j["family"] = data.family().name();
  j["n"] = data.nodes();
  j["m"] = data.layers();
  j["hypothesis_size"] = s.size();
  j["notes"] = t.notes;
  return j;
}

// ---------------------------------------------------------------- test

struct TestOptions {
  DataOptions data;
  ProjOptions proj;
  std::string stat = "auto";
  std::string dispersion = "auto";
  std::string theta_tilde = "auto";
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

RunResult run_test(const TestOptions& o) {
  RunResult r;
  const TwoSampleData data = load_data(o.data, r);
  const HypothesisSet s = load_hypothesis(o.data, r);
  for_flag("--hypothesis", [&] { s.validate(data.nodes()); return 0; });
  const ProjectionPair p = build_projection(o.proj, data, s, o.seed, r);
  const TestReport t = for_flag("--stat", [&] {
    return apply_statistic(o.stat, o.dispersion, o.theta_tilde, data, s, p, o.alpha);
  });
  json rep = report_json(t, data, s);
  if (p.padded) rep["warning"] = r.warnings.back();
  r.config = data_config(o.data, data, s);
  r.config.update(proj_config(o.proj));
  r.config.update({{"stat", o.stat}, {"dispersion", o.dispersion}, {"theta_tilde", o.theta_tilde},
                   {"alpha", o.alpha}});
  r.seed = o.seed;
  r.outputs.push_back({"report", o.out, rep.dump(2) + "\n"});
  return r;
}

// ---------------------------------------------------------------- learn-proj

struct LearnProjOptions {
  DataOptions data;
  ProjOptions proj;
  std::string out_dir = ".";
};

RunResult run_learn_proj(const LearnProjOptions& o) {
  RunResult r;
  const TwoSampleData data = load_data(o.data, r);
  const HypothesisSet s = load_hypothesis(o.data, r);
  for_flag("--hypothesis", [&] { s.validate(data.nodes()); return 0; });
  const ProjectionPair p = build_projection(o.proj, data, s, 0, r);
  const SpectralDiag diag = for_flag("--hypothesis", [&] { return spectral_diagnostics(data, s); });

  const fs::path dir(o.out_dir);
  if (p.is_kronecker()) {
    r.outputs.push_back({"U", (dir / "U.csv").string(), matrix_csv(*p.left)});
    r.outputs.push_back({"V", (dir / "V.csv").string(), matrix_csv(*p.right)});
  } else {
    r.outputs.push_back({"basis", (dir / "basis.csv").string(), matrix_csv(p.basis)});
  }
  std::ostringstream scree;
  scree << std::setprecision(17) << "index,singular_value\n";
  for (Index k = 0; k < diag.singular_values.size(); ++k) {
    scree << k + 1 << ',' << diag.singular_values(k) << '\n';
  }
  r.outputs.push_back({"scree", (dir / "scree.csv").string(), scree.str()});

  json summary = {{"provenance", p.provenance},
                  {"dimension", p.dimension()},
                  {"requested_dim", p.requested_dim},
                  {"padded", p.padded},
                  {"kronecker", p.is_kronecker()}};
  summary["suggested_d"] = diag.suggested_d ? json(*diag.suggested_d) : json(nullptr);
  summary["warnings"] = r.warnings;
  r.outputs.push_back({"summary", (dir / "projection.json").string(), summary.dump(2) + "\n"});

  r.config = data_config(o.data, data, s);
  r.config.update(proj_config(o.proj));
  return r;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  int threads = 0;
  std::string out;
  std::string records;
};

RunResult run_simulate(const SimulateOptions& o) {
  if (!o.seed) throw ArgumentError("--seed: required for simulate");
  RunResult r;
  ScenarioConfig cfg = for_flag("--config", [&] { return scenario_from_json(slurp(o.config)); });
  record_input(r, "--config", o.config);
  cfg.seed = *o.seed;
  if (o.reps) cfg.reps = *o.reps;
  cfg.threads = resolve_threads(o.threads);
  for_flag("--config", [&] { cfg.validate(); return 0; });
  const ExperimentResult res = run_experiment(cfg);
  r.outputs.push_back({"table", o.out, res.table.to_csv()});
  if (!o.records.empty()) {
    std::ostringstream os;
    os << std::setprecision(17) << "m,rep,method,failed,reject,p_value,statistic,error\n";
    for (const auto& rec : res.records) {
      std::string err = rec.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      os << rec.m << ',' << rec.rep << ',' << cfg.methods[rec.method].display_label() << ','
         << rec.failed << ',' << rec.reject << ',' << rec.p_value << ',' << rec.statistic << ",\""
         << err << "\"\n";
    }
    r.outputs.push_back({"records", o.records, os.str()});
  }
  r.config = json::parse(scenario_to_json(cfg));
  r.config["perturbation_scale"] = "standard deviation";
  r.seed = cfg.seed;
  for (const auto& row : res.table.rows) {
    if (row.failures > 0) {
      r.warnings.push_back(row.method + " at m=" + std::to_string(row.m) + ": " +
                           std::to_string(row.failures) + " failed replications");
    }
  }
  return r;
}

// ---------------------------------------------------------------- power

struct PowerOptions {
  std::string psi;
  std::optional<double> nu1, nu2;
  std::optional<Index> d, m;
  std::string theta1, theta2;
  std::string hypothesis;
  std::string u_file, v_file, basis_file;
  double sigma2 = 1.0;
  double alpha = 0.05;
  std::string out;
};

std::vector<double> parse_psi_grid(const std::string& spec) {
  // "a,b,c" or "start:stop:step".
  std::vector<double> out;
  try {
    if (spec.find(':') != std::string::npos) {
      std::stringstream ss(spec);
      std::string a, b, c;
      std::getline(ss, a, ':');
      std::getline(ss, b, ':');
      std::getline(ss, c, ':');
      const double lo = std::stod(a), hi = std::stod(b), step = std::stod(c);
      if (!(step > 0.0) || hi < lo) throw ArgumentError("--psi: need start <= stop and step > 0");
      const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
      for (long k = 0; k <= count; ++k) out.push_back(lo + static_cast<double>(k) * step);
    } else {
      std::stringstream ss(spec);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    }
  } catch (const std::logic_error&) {
    throw ArgumentError("--psi: cannot parse '" + spec + "'");
  }
  for (double v : out) {
    if (!(v >= 0.0)) throw ArgumentError("--psi: values must be non-negative");
  }
  if (out.empty()) throw ArgumentError("--psi: empty grid");
  return out;
}

RunResult run_power(const PowerOptions& o) {
  RunResult r;
  std::vector<double> psis;
  double nu1 = 0.0, nu2 = 0.0;
  const bool from_theta = !o.theta1.empty() || !o.theta2.empty();
  if (from_theta == !o.psi.empty()) throw ArgumentError("--psi: give either --psi or --theta1/--theta2");
  if (from_theta) {
    if (o.theta1.empty() || o.theta2.empty()) throw ArgumentError("--theta2: both parameter files are needed");
    if (!o.m) throw ArgumentError("--m: required with parameter files");
    if (o.hypothesis.rfind("rows=", 0) != 0) throw ArgumentError("--hypothesis: needs a rectangle spec");
    const Matrix t1 = for_flag("--theta1", [&] { return io::read_matrix_csv_file(o.theta1); });
    const Matrix t2 = for_flag("--theta2", [&] { return io::read_matrix_csv_file(o.theta2); });
    record_input(r, "--theta1", o.theta1);
    record_input(r, "--theta2", o.theta2);
    if (t1.rows() != t1.cols() || t1.rows() != t2.rows() || t1.cols() != t2.cols()) {
      throw DataFormatError("--theta2: parameter matrices must be square and of equal size");
    }
    auto [rows, cols] = for_flag("--hypothesis", [&] { return io::parse_rect_spec(o.hypothesis); });
    const HypothesisSet s = HypothesisSet::rectangle(rows, cols);
    for_flag("--hypothesis", [&] { s.validate(t1.rows()); return 0; });
    ProjectionPair p;
    if (!o.basis_file.empty()) {
      p = ProjectionPair::general(for_flag("--basis", [&] { return io::read_matrix_csv_file(o.basis_file); }));
    } else {
      if (o.u_file.empty() || o.v_file.empty()) throw ArgumentError("--u: give --u and --v, or --basis");
      p = ProjectionPair::kronecker(for_flag("--u", [&] { return io::read_matrix_csv_file(o.u_file); }),
                                    for_flag("--v", [&] { return io::read_matrix_csv_file(o.v_file); }));
    }
    for_flag("--u", [&] { p.validate(); return 0; });
    if (*o.m < 2) throw ArgumentError("--m: the exact power needs m >= 2");
    psis.push_back(for_flag("--u", [&] { return ncp_psi(t1, t2, s, p, *o.m, o.sigma2); }));
    nu1 = static_cast<double>(p.dimension());
    nu2 = 2.0 * static_cast<double>(*o.m - 1) * nu1;
  } else {
    psis = parse_psi_grid(o.psi);
    if (o.nu1 && o.nu2) {
      nu1 = *o.nu1;
      nu2 = *o.nu2;
    } else if (o.d && o.m) {
      if (*o.m < 2) throw ArgumentError("--m: the exact power needs m >= 2");
      nu1 = static_cast<double>(*o.d * *o.d);
      nu2 = 2.0 * static_cast<double>(*o.m - 1) * nu1;
    } else {
      throw ArgumentError("--nu1: give --nu1 and --nu2, or --d and --m");
    }
    if (!(nu1 > 0.0 && nu2 > 0.0)) throw ArgumentError("--nu1: degrees of freedom must be positive");
  }
  std::ostringstream os;
  os << std::setprecision(17) << "psi,power\n";
  for (double psi : psis) os << psi << ',' << power_oracle_GP(psi, nu1, nu2, o.alpha) << '\n';
  r.outputs.push_back({"curve", o.out, os.str()});
  r.config = {{"nu1", nu1}, {"nu2", nu2}, {"alpha", o.alpha}, {"psi", psis}};
  if (from_theta) r.config.update({{"sigma2", o.sigma2}, {"m", *o.m}, {"hypothesis", o.hypothesis}});
  return r;
}

// ---------------------------------------------------------------- app

struct Commands {
  TestOptions test;
  LearnProjOptions learn;
  SimulateOptions sim;
  PowerOptions power;
  std::string manifest;
  std::string replay_manifest;
  std::string replay_out_dir;
};

void build_app(CLI::App& app, Commands& c) {
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MESONET_VERSION));

  auto* test = app.add_subcommand("test", "Two-sample test on a hypothesis set");
  add_data_options(test, c.test.data);
  add_proj_options(test, c.test.proj, true);
  test->add_option("--stat", c.test.stat, "Statistic")->check(CLI::IsMember({"auto", "E", "EUD", "G", "GP"}));
  test->add_option("--dispersion", c.test.dispersion, "EUD dispersion estimator")
      ->check(CLI::IsMember({"auto", "phi_hat1", "phi_hat2"}));
  test->add_option("--theta-tilde", c.test.theta_tilde, "Plug-in parameter for E/EUD")
      ->check(CLI::IsMember({"auto", "pooled_mean", "shrunk"}));
  test->add_option("--alpha", c.test.alpha, "Level")->check(CLI::Range(0.0, 1.0));
  test->add_option("--seed", c.test.seed, "Seed for random projections");
  test->add_option("--out,-o", c.test.out, "Report path (default stdout)");

  auto* learn = app.add_subcommand("learn-proj", "Learn projections from held-out edges");
  add_data_options(learn, c.learn.data);
  add_proj_options(learn, c.learn.proj, false);
  learn->add_option("--out-dir", c.learn.out_dir, "Directory for U.csv, V.csv, scree.csv");

  auto* sim = app.add_subcommand("simulate", "Rejection-rate simulation from a scenario file");
  sim->add_option("--config", c.sim.config, "Scenario JSON")->required();
  sim->add_option("--seed", c.sim.seed, "Master seed (required)");
  sim->add_option("--reps", c.sim.reps, "Override the replication count")->check(CLI::PositiveNumber);
  sim->add_option("--threads", c.sim.threads, "Worker cap (default MESONET_THREADS or all cores)");
  sim->add_option("--out,-o", c.sim.out, "Rejection table CSV (default stdout)");
  sim->add_option("--records", c.sim.records, "Per-replication CSV");

  auto* power = app.add_subcommand("power", "Exact power of the GP test");
  power->add_option("--psi", c.power.psi, "Non-centrality grid 'a,b,c' or 'start:stop:step'");
  power->add_option("--nu1", c.power.nu1, "Numerator degrees of freedom");
  power->add_option("--nu2", c.power.nu2, "Denominator degrees of freedom");
  power->add_option("--d", c.power.d, "Projection dimension (nu1 = d^2)");
  power->add_option("--m", c.power.m, "Layers per sample");
  power->add_option("--theta1", c.power.theta1, "CSV of the sample-1 parameter matrix");
  power->add_option("--theta2", c.power.theta2, "CSV of the sample-2 parameter matrix");
  power->add_option("--hypothesis", c.power.hypothesis, "Rectangle spec for parameter files");
  power->add_option("--u", c.power.u_file, "CSV of U");
  power->add_option("--v", c.power.v_file, "CSV of V");
  power->add_option("--basis", c.power.basis_file, "CSV basis");
  power->add_option("--sigma2", c.power.sigma2, "Edge variance")->check(CLI::PositiveNumber);
  power->add_option("--alpha", c.power.alpha, "Level")->check(CLI::Range(0.0, 1.0));
  power->add_option("--out,-o", c.power.out, "Curve CSV (default stdout)");

  for (auto* sub : {test, learn, sim, power}) {
    sub->add_option("--manifest", c.manifest, "Run-manifest path (default <output>.manifest.json)");
  }

  auto* replay = app.add_subcommand("replay", "Rerun a manifest and compare outputs");
  replay->add_option("manifest", c.replay_manifest, "Manifest written by an earlier run")->required();
  replay->add_option("--out-dir", c.replay_out_dir, "Write reproduced outputs here");
}

RunResult dispatch(const std::string& name, const Commands& c) {
  if (name == "test") return run_test(c.test);
  if (name == "learn-proj") return run_learn_proj(c.learn);
  if (name == "simulate") return run_simulate(c.sim);
  if (name == "power") return run_power(c.power);
  throw ArgumentError("unknown command '" + name + "'");
}

void emit(const Output& out) {
  if (out.path.empty()) {
    std::cout << out.content << std::flush;
    return;
  }
  const fs::path p(out.path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ArgumentError("cannot write '" + out.path + "'");
  f << out.content;
}

std::string default_manifest(const std::string& cmd, const RunResult& r) {
  if (cmd == "learn-proj") {
    return (fs::path(r.outputs.front().path).parent_path() / "manifest.json").string();
  }
  const std::string& first = r.outputs.front().path;
  if (!first.empty()) return first + ".manifest.json";
  return "mesonet-" + cmd + ".manifest.json";
}

json manifest_json(const std::string& cmd, const std::vector<std::string>& argv, const RunResult& r) {
  json j;
  j["command"] = cmd;
  j["argv"] = argv;
  j["cwd"] = fs::current_path().string();
  j["config"] = r.config;
  j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
  j["timestamp"] = utc_timestamp();
  j["version"] = MESONET_VERSION;
  j["inputs"] = r.inputs;
  j["outputs"] = json::array();
  for (const auto& o : r.outputs) {
    j["outputs"].push_back({{"label", o.label},
                            {"path", o.path.empty() ? json(nullptr) : json(o.path)},
                            {"digest", digest(o.content)}});
  }
  j["warnings"] = r.warnings;
  return j;
}

std::vector<std::string> strip_manifest_flag(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest") {
      ++i;
      continue;
    }
    if (args[i].rfind("--manifest=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  return out;
}

int run_replay(const Commands& outer) {
  const json m = for_flag("manifest", [&] {
    try {
      return json::parse(slurp(outer.replay_manifest));
    } catch (const json::parse_error& e) {
      throw DataFormatError(e.what());
    }
  });
  const std::string cmd = m.at("command").get<std::string>();
  const auto args = m.at("argv").get<std::vector<std::string>>();
  const fs::path out_dir = outer.replay_out_dir.empty() ? fs::path() : fs::absolute(outer.replay_out_dir);
  if (m.contains("cwd")) {
    std::error_code ec;
    fs::current_path(m["cwd"].get<std::string>(), ec);
  }

  CLI::App app{"mesonet"};
  Commands c;
  build_app(app, c);
  std::vector<std::string> full = {"mesonet", cmd};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> cargv;
  for (auto& s : full) cargv.push_back(s.data());
  app.parse(static_cast<int>(cargv.size()), cargv.data());

  RunResult r = dispatch(cmd, c);
  json summary = {{"command", cmd}, {"outputs", json::array()}};
  bool same = true;
  const json& expected = m.at("outputs");
  for (std::size_t i = 0; i < r.outputs.size(); ++i) {
    auto& o = r.outputs[i];
    const std::string want = i < expected.size() ? expected[i].value("digest", "") : "";
    const std::string got = digest(o.content);
    same = same && want == got;
    summary["outputs"].push_back({{"label", o.label}, {"expected", want}, {"actual", got}, {"match", want == got}});
    if (!out_dir.empty()) {
      o.path = (out_dir / (o.path.empty() ? o.label + ".out" : fs::path(o.path).filename().string())).string();
      emit(o);
    }
  }
  same = same && r.outputs.size() == expected.size();
  json inputs_changed = json::array();
  for (const auto& in : m.value("inputs", json::array())) {
    const std::string path = in.at("path");
    std::error_code ec;
    if (!fs::exists(path, ec) || digest(slurp(path)) != in.at("digest")) inputs_changed.push_back(path);
  }
  summary["inputs_changed"] = inputs_changed;
  summary["reproduced"] = same;
  std::cout << summary.dump(2) << "\n";
  return same ? ok : mismatch;
}

int run_main(int argc, char** argv) {
  CLI::App app{"mesonet: two-sample tests for mesoscale structure in multilayer networks"};
  Commands c;
  build_app(app, c);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_args;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  if (cmd == "replay") return run_replay(c);

  std::vector<std::string> args(argv + 2, argv + argc);
  RunResult r = dispatch(cmd, c);
  for (const auto& o : r.outputs) emit(o);
  const std::string mpath = c.manifest.empty() ? default_manifest(cmd, r) : c.manifest;
  emit({"manifest", mpath, manifest_json(cmd, strip_manifest_flag(args), r).dump(2) + "\n"});
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_args;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_args;
  } catch (const DataFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_data;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numerical;
  } catch (const HeldOutViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_args;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mismatch;
  }
}
