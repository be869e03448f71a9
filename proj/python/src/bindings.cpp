// Python bindings. Node indices are 0-based here, as in the C++ API.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mesonet/competitors.hpp"
#include "mesonet/errors.hpp"
#include "mesonet/io.hpp"
#include "mesonet/numkit.hpp"
#include "mesonet/projlearn.hpp"
#include "mesonet/simharness.hpp"
#include "mesonet/stattests.hpp"

namespace py = pybind11;
using namespace mesonet;

namespace {

NetworkStack stack_from(const std::vector<Matrix>& layers) { return NetworkStack(layers); }

TwoSampleData make_data(const std::vector<Matrix>& a, const std::vector<Matrix>& b,
                        const std::string& family) {
  return TwoSampleData(stack_from(a), stack_from(b), EdgeFamily::parse(family));
}

py::dict report_dict(const TestReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["statistic"] = r.statistic;
  d["reference"] = r.ref.describe();
  d["p_value"] = r.p_value;
  d["reject"] = r.reject;
  d["alpha"] = r.alpha;
  d["effective_dim"] = r.effective_dim;
  d["requested_dim"] = r.requested_dim;
  d["padded"] = r.padded;
  d["provenance"] = r.provenance;
  d["dispersion"] = r.dispersion ? py::cast(*r.dispersion) : py::none();
  d["notes"] = r.notes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mesonet, m) {
  m.doc() = "Projection-based two-sample tests for mesoscale structure in multilayer networks";
  m.attr("__version__") = MESONET_VERSION;

  auto base = py::register_exception<Error>(m, "MesonetError");
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<DataFormatError>(m, "DataFormatError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<DegenerateSignalError>(m, "DegenerateSignalError", numerical.ptr());
  py::register_exception<HeldOutViolation>(m, "HeldOutViolation", base.ptr());

  py::class_<HypothesisSet>(m, "HypothesisSet")
      .def_static("rectangle", &HypothesisSet::rectangle, py::arg("rows"), py::arg("cols"),
                  py::arg("directed") = true, py::arg("include_diagonal") = true)
      .def_static(
          "from_pairs",
          [](const std::vector<std::pair<Index, Index>>& pairs, bool directed, bool diag) {
            std::vector<NodePair> p;
            for (auto [i, j] : pairs) p.push_back({i, j});
            return HypothesisSet::from_pairs(std::move(p), directed, diag);
          },
          py::arg("pairs"), py::arg("directed") = true, py::arg("include_diagonal") = true)
      .def_property_readonly("rows", &HypothesisSet::rows)
      .def_property_readonly("cols", &HypothesisSet::cols)
      .def_property_readonly("is_rectangle", &HypothesisSet::is_rectangle)
      .def_property_readonly("size", &HypothesisSet::size)
      .def_property_readonly("pairs",
                             [](const HypothesisSet& s) {
                               std::vector<std::pair<Index, Index>> out;
                               for (const auto& p : s.pairs()) out.emplace_back(p.row, p.col);
                               return out;
                             })
      .def("mask", &HypothesisSet::mask, py::arg("n"));

  py::class_<ProjectionPair>(m, "ProjectionPair")
      .def_static("kronecker", &ProjectionPair::kronecker, py::arg("u"), py::arg("v"),
                  py::arg("provenance") = "fixed")
      .def_static("general", &ProjectionPair::general, py::arg("basis"),
                  py::arg("provenance") = "fixed")
      .def_readonly("left", &ProjectionPair::left)
      .def_readonly("right", &ProjectionPair::right)
      .def_readonly("basis", &ProjectionPair::basis)
      .def_readonly("padded", &ProjectionPair::padded)
      .def_readonly("provenance", &ProjectionPair::provenance)
      .def_property_readonly("dimension", &ProjectionPair::dimension);

  py::class_<TwoSampleData>(m, "TwoSampleData")
      .def(py::init(&make_data), py::arg("sample1"), py::arg("sample2"),
           py::arg("family") = "gaussian")
      .def_property_readonly("nodes", &TwoSampleData::nodes)
      .def_property_readonly("layers", &TwoSampleData::layers)
      .def_property_readonly("family", [](const TwoSampleData& d) { return d.family().name(); })
      .def("mean", [](const TwoSampleData& d, int g) { return d.sample(g).mean(); }, py::arg("group"))
      .def("layer", [](const TwoSampleData& d, int g, Index k) { return d.sample(g).layer(k); },
           py::arg("group"), py::arg("k"))
      .def("swapped", &TwoSampleData::swapped);

  // Statistics.
  m.def("stat_E",
        [](const TwoSampleData& d, const HypothesisSet& s, const ProjectionPair& p,
           const std::string& theta_tilde, double alpha) {
          return report_dict(stat_E(d, s, p, parse_theta_tilde_mode(theta_tilde), alpha));
        },
        py::arg("data"), py::arg("hypothesis"), py::arg("projection"),
        py::arg("theta_tilde") = "pooled_mean", py::arg("alpha") = 0.05);
  m.def("stat_EUD",
        [](const TwoSampleData& d, const HypothesisSet& s, const ProjectionPair& p,
           const std::string& dispersion, const std::string& theta_tilde, double alpha) {
          return report_dict(stat_EUD(d, s, p, parse_dispersion_estimator(dispersion),
                                      parse_theta_tilde_mode(theta_tilde), alpha));
        },
        py::arg("data"), py::arg("hypothesis"), py::arg("projection"),
        py::arg("dispersion") = "phi_hat1", py::arg("theta_tilde") = "pooled_mean",
        py::arg("alpha") = 0.05);
  m.def("stat_G", [](const TwoSampleData& d, const HypothesisSet& s, const ProjectionPair& p,
                     double alpha) { return report_dict(stat_G(d, s, p, alpha)); },
        py::arg("data"), py::arg("hypothesis"), py::arg("projection"), py::arg("alpha") = 0.05);
  m.def("stat_GP", [](const TwoSampleData& d, const HypothesisSet& s, const ProjectionPair& p,
                      double alpha) { return report_dict(stat_GP(d, s, p, alpha)); },
        py::arg("data"), py::arg("hypothesis"), py::arg("projection"), py::arg("alpha") = 0.05);
  m.def("apply_statistic",
        [](const std::string& stat, const TwoSampleData& d, const HypothesisSet& s,
           const ProjectionPair& p, double alpha) {
          return report_dict(apply_statistic(stat, "auto", "auto", d, s, p, alpha));
        },
        py::arg("stat"), py::arg("data"), py::arg("hypothesis"), py::arg("projection"),
        py::arg("alpha") = 0.05);
  m.def("ncp_psi", &ncp_psi, py::arg("theta1"), py::arg("theta2"), py::arg("hypothesis"),
        py::arg("projection"), py::arg("m"), py::arg("sigma2"));
  m.def("power_oracle_GP", &power_oracle_GP, py::arg("psi"), py::arg("nu1"), py::arg("nu2p"),
        py::arg("alpha") = 0.05);

  // Competitors.
  m.def("basic_gaussian_f_test",
        [](const TwoSampleData& d, const HypothesisSet& s, double alpha) {
          return report_dict(basic_gaussian_f_test(d, s, alpha));
        },
        py::arg("data"), py::arg("hypothesis"), py::arg("alpha") = 0.05);
  m.def("basic_proportion_test",
        [](const TwoSampleData& d, const HypothesisSet& s, double alpha) {
          return report_dict(basic_proportion_test(d, s, alpha));
        },
        py::arg("data"), py::arg("hypothesis"), py::arg("alpha") = 0.05);
  m.def("block_projection", &block_projection, py::arg("hypothesis"));
  m.def("random_projection",
        [](const HypothesisSet& s, Index d, std::uint64_t seed) {
          RandomStream rng(seed);
          return random_projection(s, d, rng);
        },
        py::arg("hypothesis"), py::arg("d"), py::arg("seed"));

  // Projection learning.
  m.def("learn_projections_rect",
        [](const TwoSampleData& d, const HypothesisSet& s, Index dim, std::optional<Index> d_star) {
          LearnOptions opt;
          opt.d_star = d_star;
          return learn_projections_rect(d, s, dim, opt);
        },
        py::arg("data"), py::arg("hypothesis"), py::arg("d"), py::arg("d_star") = py::none());
  m.def("learn_projections_impute",
        [](const TwoSampleData& d, const HypothesisSet& s, Index dim, bool center) {
          LearnOptions opt;
          opt.center = center;
          return learn_projections_impute(d, s, dim, opt);
        },
        py::arg("data"), py::arg("hypothesis"), py::arg("d"), py::arg("center") = false);
  m.def("density_correct", &density_correct, py::arg("projection"));
  m.def("degree_correct",
        py::overload_cast<const ProjectionPair&, const HypothesisSet&>(&degree_correct),
        py::arg("projection"), py::arg("hypothesis"));

  // Special functions.
  m.def("f_cdf", &numkit::f_cdf, py::arg("x"), py::arg("nu1"), py::arg("nu2"));
  m.def("f_quantile", &numkit::f_quantile, py::arg("nu1"), py::arg("nu2"), py::arg("p"));
  m.def("noncentral_f_cdf", &numkit::noncentral_f_cdf, py::arg("x"), py::arg("nu1"),
        py::arg("nu2"), py::arg("lam"));
  m.def("projector_distance", &numkit::projector_distance, py::arg("a"), py::arg("b"));

  // Simulation.
  m.def("run_experiment",
        [](const std::string& scenario_json, std::optional<std::uint64_t> seed,
           std::optional<int> reps, int threads) {
          ScenarioConfig cfg = scenario_from_json(scenario_json);
          if (seed) cfg.seed = *seed;
          if (reps) cfg.reps = *reps;
          cfg.threads = threads;
          cfg.validate();
          py::gil_scoped_release release;
          return run_experiment(cfg).table.to_csv();
        },
        py::arg("scenario_json"), py::arg("seed") = py::none(), py::arg("reps") = py::none(),
        py::arg("threads") = 0,
        "Runs a scenario (JSON text, 1-based indices) and returns the rejection table as CSV.");
  m.def("generate",
        [](const std::string& scenario_json, Index m_layers, std::uint64_t seed) {
          const ScenarioConfig cfg = scenario_from_json(scenario_json);
          RandomStream rng(seed);
          const SimulatedSample x = generate(cfg, m_layers, rng);
          return py::make_tuple(x.data, x.theta1, x.theta2, cfg.hypothesis());
        },
        py::arg("scenario_json"), py::arg("m"), py::arg("seed"),
        "One replication: (data, theta1, theta2, hypothesis).");

  // Files (1-based indices on disk).
  m.def("read_stack",
        [](const std::string& path) { return io::read_stack_file(path).all_layers(); },
        py::arg("path"));
  m.def("write_stack",
        [](const std::string& path, const std::vector<Matrix>& layers) {
          io::write_stack_file(path, stack_from(layers));
        },
        py::arg("path"), py::arg("layers"));
}
