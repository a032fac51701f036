#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "confplan/acp_online.hpp"
#include "confplan/cp_core.hpp"
#include "confplan/harness/config.hpp"
#include "confplan/harness/experiment.hpp"
#include "confplan/harness/plots.hpp"
#include "confplan/harness/verify.hpp"

namespace py = pybind11;
using namespace confplan;
using namespace confplan::harness;

namespace {

CalibrationSet calibration_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("scores: need at least one episode");
  const std::size_t steps = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * steps);
  for (const auto& r : rows) {
    if (r.size() != steps) throw std::invalid_argument("scores: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return CalibrationSet(rows.size(), steps, std::move(flat));
}

// Applies dotted-path overrides given as JSON text, the same way the CLI --set flag does.
ExperimentSpec spec_from(const std::string& spec_json, const std::string& base_dir,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  Json j = Json::parse(spec_json, nullptr, true, true);
  for (const auto& [path, value] : overrides) set_json_path(j, path, Json::parse(value));
  return experiment_from_json(j, base_dir);
}

std::string criterion_json(const CriterionResult& r) {
  Json j{{"id", r.id},         {"name", r.name},     {"passed", r.passed},
         {"measured", r.measured}, {"threshold", r.threshold}, {"detail", r.detail},
         {"seconds", r.seconds}};
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_confplan, m) {
  m.doc() = "Native bindings for the confplan planners and experiment harness.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PlotError>(m, "PlotError", PyExc_ValueError);

  m.def("conformal_rank", [](std::size_t n, double confidence) {
    const ConformalRank r = conformal_rank(n, confidence);
    return py::make_tuple(r.k, r.rank_clipped);
  }, py::arg("n"), py::arg("confidence"));

  py::class_<QuantileTable>(m, "QuantileTable")
      .def_property_readonly("levels", &QuantileTable::levels)
      .def_property_readonly("horizon_steps", &QuantileTable::horizon_steps)
      .def_property_readonly("rank_clipped", &QuantileTable::any_rank_clipped)
      .def("threshold", &QuantileTable::threshold, py::arg("level_index"), py::arg("t"))
      .def("lookup", &QuantileTable::lookup, py::arg("confidence"), py::arg("t"))
      .def("to_csv", [](const QuantileTable& t) {
        std::ostringstream out;
        write_quantile_table_csv(out, t);
        return out.str();
      });

  m.def("build_quantile_table",
        [](const std::vector<std::vector<double>>& scores, std::vector<double> levels, double c_min) {
          ConfidenceLadder ladder{std::move(levels), c_min};
          ladder.validate();
          return build_quantile_table(calibration_from_rows(scores), ladder);
        },
        py::arg("scores"), py::arg("levels"), py::arg("c_min") = 0.0,
        "scores[episode][t] nonconformity values; returns per-level thresholds.");

  m.def("quantile_threshold",
        [](const std::vector<double>& column, double confidence) {
          std::vector<std::vector<double>> rows;
          rows.reserve(column.size());
          for (double v : column) rows.push_back({v});
          const QuantileThreshold q = quantile_threshold(calibration_from_rows(rows), 0, confidence);
          return py::make_tuple(q.value, q.rank_clipped);
        },
        py::arg("scores"), py::arg("confidence"));

  m.def("ks_distance", [](const std::vector<double>& a, const std::vector<double>& b) {
    return ks_distance(a, b);
  });

  m.def("exchangeability_gate",
        [](const std::vector<double>& cal, const std::vector<double>& fresh, int warmup,
           int block_length, int permutations, double alpha, std::uint64_t seed) {
          GateConfig cfg{warmup, block_length, permutations, alpha, seed};
          cfg.validate();
          const GateResult r = exchangeability_gate(cal, fresh, cfg);
          py::dict d;
          d["verdict"] = to_string(r.verdict);
          d["ks_distance"] = r.ks_distance_D;
          d["p_value"] = r.p_value;
          return d;
        },
        py::arg("calibration_scores"), py::arg("new_scores"), py::arg("warmup") = 50,
        py::arg("block_length") = 5, py::arg("permutations") = 199, py::arg("alpha") = 0.05,
        py::arg("seed") = 0);

  py::class_<AcpState>(m, "AcpState")
      .def(py::init([](double lambda0, double kappa, double lambda_min, double lambda_max,
                       double alpha) {
             AcpState s;
             s.lambda = lambda0;
             s.kappa = kappa;
             s.lambda_min = lambda_min;
             s.lambda_max = lambda_max;
             s.alpha = alpha;
             s.validate();
             return s;
           }),
           py::arg("lambda0") = 1.0, py::arg("kappa") = 0.05, py::arg("lambda_min") = 0.1,
           py::arg("lambda_max") = 10.0, py::arg("alpha") = 0.1)
      .def_readonly("lambda_", &AcpState::lambda)
      .def_readonly("alpha", &AcpState::alpha)
      .def("threshold", [](const AcpState& s, double d_min) { return acp_threshold(s, d_min); })
      .def("update", [](AcpState& s, double score, double d_min) {
        return acp_update_inplace(s, score, d_min);
      }, py::arg("score"), py::arg("reference"), "Returns the miscoverage indicator e_t.")
      .def("errors", [](const AcpState& s) {
        std::vector<int> e;
        for (const AcpRecord& r : s.history) e.push_back(r.e);
        return e;
      })
      .def("lambdas", [](const AcpState& s) {
        std::vector<double> l;
        for (const AcpRecord& r : s.history) l.push_back(r.lambda);
        return l;
      });

  m.def("_experiment_resolved",
        [](const std::string& spec_json, const std::string& base_dir,
           const std::vector<std::pair<std::string, std::string>>& overrides) {
          return experiment_to_json(spec_from(spec_json, base_dir, overrides)).dump();
        });

  m.def("_run_experiment",
        [](const std::string& spec_json, const std::string& base_dir,
           const std::vector<std::pair<std::string, std::string>>& overrides, int jobs,
           const std::string& output_dir) {
          const ExperimentSpec spec = spec_from(spec_json, base_dir, overrides);
          RunOptions opt;
          opt.jobs = jobs;
          if (!output_dir.empty()) opt.output_dir = output_dir;
          ExperimentResult r;
          {
            py::gil_scoped_release release;
            r = run_experiment(spec, opt);
          }
          Json out = r.summary;
          out["output_dir"] = r.output_dir.string();
          return out.dump();
        });

  m.def("_verify",
        [](const std::string& scenario_dir, std::uint64_t seed, int jobs, std::vector<int> only) {
          VerifyOptions opt;
          opt.scenario_dir = scenario_dir;
          opt.seed = seed;
          opt.jobs = jobs;
          opt.only = std::move(only);
          std::vector<CriterionResult> results;
          {
            py::gil_scoped_release release;
            results = run_verify(opt);
          }
          std::vector<std::string> out;
          for (const auto& r : results) out.push_back(criterion_json(r));
          return out;
        });

  m.def("render_plot",
        [](const std::string& kind, const std::string& csv_text) {
          return render_plot(plot_kind_from_string(kind), CsvTable::parse(csv_text));
        },
        py::arg("kind"), py::arg("csv_text"), "Renders an SVG document from CSV text.");

  m.def("default_data_file", [](const std::string& kind) {
    return default_data_file(plot_kind_from_string(kind));
  });

  m.attr("DEFAULT_SCENARIO_DIR") = CONFPLAN_SCENARIO_DIR;
}
