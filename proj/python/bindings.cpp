#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "edmfde/edm_fde.hpp"
#include "edmfde/errors.hpp"
#include "edmfde/evaluation.hpp"
#include "edmfde/io.hpp"
#include "edmfde/residual_fde.hpp"
#include "edmfde/scenario.hpp"
#include "edmfde/solution_separation.hpp"

namespace py = pybind11;
using namespace edmfde;

namespace {

py::int_ to_py(const eval::BigInt& v) {
  return py::module_::import("builtins").attr("int")(py::str(v.str()));
}

EdmStatistic parse_statistic(const std::string& name) {
  if (name == "current") return EdmStatistic::current;
  if (name == "legacy2021") return EdmStatistic::legacy2021;
  throw std::invalid_argument("statistic must be 'current' or 'legacy2021'");
}

EigenRoute parse_route(const std::string& name) {
  if (name == "low_rank") return EigenRoute::low_rank;
  if (name == "dense") return EigenRoute::dense;
  throw std::invalid_argument("route must be 'low_rank' or 'dense'");
}

sim::ScenarioConfig scenario_from(const std::optional<std::string>& json) {
  return json ? io::parse_scenario(*json) : sim::default_scenario();
}

}  // namespace

PYBIND11_MODULE(_edmfde, m) {
  m.doc() = "GNSS fault detection and exclusion with Euclidean distance matrices";

  auto base = py::register_exception<FdeError>(m, "FdeError", PyExc_RuntimeError);
  py::register_exception<InvalidMatrix>(m, "InvalidMatrix", base.ptr());
  py::register_exception<SingularGeometry>(m, "SingularGeometry", base.ptr());
  py::register_exception<TooFewMeasurements>(m, "TooFewMeasurements", base.ptr());
  py::register_exception<InsufficientDimension>(m, "InsufficientDimension", base.ptr());
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", base.ptr());
  py::register_exception<UndefinedRate>(m, "UndefinedRate", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<Measurement>(m, "Measurement")
      .def(py::init<>())
      .def_readwrite("sv_id", &Measurement::sv_id)
      .def_readwrite("constellation", &Measurement::constellation)
      .def_readwrite("sat_pos", &Measurement::sat_pos)
      .def_readwrite("sat_clock_bias", &Measurement::sat_clock_bias)
      .def_readwrite("pseudorange_raw", &Measurement::pseudorange_raw)
      .def_readwrite("iono_delay", &Measurement::iono_delay)
      .def_readwrite("tropo_delay", &Measurement::tropo_delay)
      .def_readwrite("constellation_bias", &Measurement::constellation_bias)
      .def_readwrite("weight", &Measurement::weight)
      .def_readwrite("multipath", &Measurement::multipath)
      .def_readwrite("truth_fault", &Measurement::truth_fault);

  py::class_<EpochSet>(m, "EpochSet")
      .def(py::init<>())
      .def_readwrite("trace_id", &EpochSet::trace_id)
      .def_readwrite("timestamp", &EpochSet::timestamp)
      .def_readwrite("measurements", &EpochSet::measurements)
      .def_readwrite("rx_clock_bias_est", &EpochSet::rx_clock_bias_est)
      .def_readwrite("truth_rx_pos", &EpochSet::truth_rx_pos)
      .def("__len__", &EpochSet::size)
      .def("truth_fault_count", &EpochSet::truth_fault_count)
      .def("satellite_positions", [](const EpochSet& e) { return Matrix(satellite_positions(e)); })
      .def("conditioned_ranges", [](const EpochSet& e) { return conditioned_ranges(e); });

  py::class_<FdeResult>(m, "FdeResult")
      .def_property_readonly("method", [](const FdeResult& r) { return std::string(to_string(r.method)); })
      .def_readonly("sv_ids", &FdeResult::sv_ids)
      .def_readonly("flags", &FdeResult::flags)
      .def_readonly("exclusion_order", &FdeResult::exclusion_order)
      .def_readonly("statistic_trace", &FdeResult::statistic_trace)
      .def_readonly("wall_time_s", &FdeResult::wall_time_s)
      .def_readonly("converged", &FdeResult::converged)
      .def("flagged_count", &FdeResult::flagged_count)
      .def("exclusion_rank", &FdeResult::exclusion_rank);

  py::class_<Spectrum>(m, "Spectrum")
      .def_readonly("values", &Spectrum::values)
      .def_readonly("vectors", &Spectrum::vectors)
      .def("value", &Spectrum::value);

  m.def("sym_eig", [](const Matrix& a) { return sym_eig(SymMatrix(a)); }, py::arg("matrix"),
        "Eigenpairs of a symmetric matrix, ordered by descending magnitude.");

  m.def("build_edm",
        [](const Matrix& sat_pos, const Vector& ranges) {
          return build_edm(PositionMatrix(sat_pos), ranges).entries.entries();
        },
        py::arg("sat_pos"), py::arg("ranges"));
  m.def("gram_from_edm",
        [](const Matrix& edm) { return gram_from_edm({SymMatrix(edm)}).entries(); },
        py::arg("edm"));
  m.def("gram_spectrum",
        [](const Matrix& sat_pos, const Vector& ranges, const std::string& route) {
          return gram_spectrum(PositionMatrix(sat_pos), ranges, parse_route(route));
        },
        py::arg("sat_pos"), py::arg("ranges"), py::arg("route") = "low_rank");
  m.def("detection_statistic", &detection_statistic, py::arg("spectrum"), py::arg("n") = 3);
  m.def("detection_statistic_2021", &detection_statistic_2021, py::arg("spectrum"),
        py::arg("n"), py::arg("m"));
  m.def("exclusion_ranking", &exclusion_ranking, py::arg("spectrum"), py::arg("n") = 3);

  m.def("greedy_edm_fde",
        [](const EpochSet& e, double threshold, std::optional<int> max_faults,
           int removals_per_iter, const std::string& statistic, const std::string& route) {
          EdmFdeOptions opts;
          opts.max_faults = max_faults;
          opts.removals_per_iter = removals_per_iter;
          opts.statistic = parse_statistic(statistic);
          opts.route = parse_route(route);
          return greedy_edm_fde(e, threshold, opts);
        },
        py::arg("epoch"), py::arg("threshold"), py::arg("max_faults") = py::none(),
        py::arg("removals_per_iter") = 1, py::arg("statistic") = "current",
        py::arg("route") = "low_rank");

  py::class_<WlsSolution>(m, "WlsSolution")
      .def_readonly("rx_pos", &WlsSolution::rx_pos)
      .def_readonly("rx_clock_bias", &WlsSolution::rx_clock_bias)
      .def_readonly("iterations", &WlsSolution::iterations)
      .def_readonly("converged", &WlsSolution::converged)
      .def_readonly("residuals", &WlsSolution::residuals);

  m.def("wls_solve",
        [](const Matrix& sat_pos, const Vector& ranges, const Vector& weights) {
          return wls_solve(PositionMatrix(sat_pos), ranges, weights);
        },
        py::arg("sat_pos"), py::arg("ranges"), py::arg("weights"));
  m.def("chi_square_statistic",
        [](const Vec3& rx, const Matrix& sat_pos, const Vector& r, const Vector& w) {
          return chi_square_statistic(rx, PositionMatrix(sat_pos), r, w);
        },
        py::arg("rx_pos"), py::arg("sat_pos"), py::arg("residuals"), py::arg("weights"));
  m.def("normalized_residuals",
        [](const Vec3& rx, const Matrix& sat_pos, const Vector& r, const Vector& w) {
          return normalized_residuals(rx, PositionMatrix(sat_pos), r, w);
        },
        py::arg("rx_pos"), py::arg("sat_pos"), py::arg("residuals"), py::arg("weights"));
  m.def("greedy_residual_fde",
        [](const EpochSet& e, double threshold, std::optional<int> max_faults) {
          ResidualFdeOptions opts;
          opts.max_faults = max_faults;
          return greedy_residual_fde(e, threshold, opts);
        },
        py::arg("epoch"), py::arg("threshold"), py::arg("max_faults") = py::none());

  m.def("solution_separation_fde",
        [](const EpochSet& e, double detection, double exclusion, int max_faults,
           std::uint64_t subset_budget) {
          SsConfig cfg;
          cfg.max_faults = max_faults;
          cfg.thresholds = FixedThresholds{detection, exclusion};
          cfg.subset_budget = subset_budget;
          return solution_separation_fde(e, cfg);
        },
        py::arg("epoch"), py::arg("detection") = 5.0, py::arg("exclusion") = 5.0,
        py::arg("max_faults") = 1, py::arg("subset_budget") = 1'000'000);
  m.def("subset_count", &subset_count, py::arg("m"), py::arg("f"));

  m.def("default_scenario_json", [] { return io::scenario_to_json(sim::default_scenario()); });
  m.def("simulate",
        [](const std::optional<std::string>& config_json, std::optional<std::uint64_t> seed,
           std::optional<int> fault_count, std::optional<double> fault_bias_m,
           std::optional<double> duration_h) {
          sim::ScenarioConfig cfg = scenario_from(config_json);
          if (seed) cfg.seed = *seed;
          if (fault_count) cfg.fault_count = *fault_count;
          if (fault_bias_m) cfg.fault_bias_m = *fault_bias_m;
          if (duration_h) cfg.duration_h = *duration_h;
          return sim::simulate(cfg).epochs;
        },
        py::arg("config_json") = py::none(), py::arg("seed") = py::none(),
        py::arg("fault_count") = py::none(), py::arg("fault_bias_m") = py::none(),
        py::arg("duration_h") = py::none(),
        "Simulated epochs; config_json follows the scenario file schema.");

  m.def("load_epochs",
        [](const std::filesystem::path& path, const std::string& clock) {
          io::LoadOptions opts;
          if (clock == "wls") {
            opts.clock_bias_source = io::ClockBiasSource::wls_estimate;
          } else if (clock != "column") {
            throw std::invalid_argument("clock must be 'column' or 'wls'");
          }
          io::LoadResult loaded = io::load_epochs(path, opts);
          return py::make_tuple(std::move(loaded.epochs), std::move(loaded.warnings));
        },
        py::arg("path"), py::arg("clock") = "column",
        "Returns (epochs, warnings).");
  m.def("save_epochs",
        [](const std::filesystem::path& path, const std::vector<EpochSet>& epochs) {
          io::save_epochs(path, epochs);
        },
        py::arg("path"), py::arg("epochs"));

  m.def("run_fde",
        [](const EpochSet& e, const std::string& method, double threshold) {
          return eval::run_fde(e, parse_method(method), threshold);
        },
        py::arg("epoch"), py::arg("method"), py::arg("threshold"));
  m.def("roc_curve",
        [](const std::vector<EpochSet>& epochs, const std::string& method,
           const std::vector<double>& grid, unsigned workers) {
          const auto runs = eval::sweep(epochs, parse_method(method), grid, {}, workers);
          py::list out;
          for (const eval::RocPoint& p : eval::roc_curve(epochs, runs)) {
            out.append(py::make_tuple(p.threshold, p.true_positive_rate, p.false_alarm_rate));
          }
          return out;
        },
        py::arg("epochs"), py::arg("method"), py::arg("grid"), py::arg("workers") = 1,
        "List of (threshold, true_positive_rate, false_alarm_rate) sorted by false-alarm rate.");
  m.def("auc",
        [](const std::vector<std::tuple<double, double, double>>& points) {
          std::vector<eval::RocPoint> pts;
          for (const auto& [t, tpr, far] : points) pts.push_back({t, tpr, far});
          return eval::auc(pts);
        },
        py::arg("points"));
  m.def("simulation_threshold_grid",
        [](const std::string& method) { return eval::simulation_threshold_grid(parse_method(method)); },
        py::arg("method"));
  m.def("complexity",
        [](int m_, int f, int k) {
          return py::make_tuple(to_py(eval::edm_complexity(m_, f)),
                                to_py(eval::residual_complexity(m_, f, k)),
                                to_py(eval::ss_complexity(m_, f)));
        },
        py::arg("m"), py::arg("f"), py::arg("k") = 10, "(edm, residual, ss) operation counts.");
}
