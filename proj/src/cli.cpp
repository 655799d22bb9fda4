#include "edmfde/cli.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>

#include "edmfde/errors.hpp"
#include "edmfde/evaluation.hpp"
#include "edmfde/io.hpp"
#include "edmfde/scenario.hpp"

namespace edmfde::cli {

std::vector<double> parse_grid(const std::string& spec, FdeMethod method) {
  if (spec == "sim") return eval::simulation_threshold_grid(method);
  if (spec == "default") return eval::default_threshold_grid(method);
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, spec.rfind("log:", 0) == 0 ? ':' : ',');) {
    parts.push_back(part);
  }
  if (spec.rfind("log:", 0) == 0) {
    if (parts.size() != 4) throw std::invalid_argument("grid spec must be log:LO:HI:N");
    const double n = io::parse_double(parts[3]);
    if (n < 2 || n != static_cast<double>(static_cast<std::size_t>(n))) {
      throw std::invalid_argument("grid point count must be an integer >= 2");
    }
    return eval::log_grid(io::parse_double(parts[1]), io::parse_double(parts[2]),
                          static_cast<std::size_t>(n));
  }
  std::vector<double> grid;
  for (const std::string& p : parts) grid.push_back(io::parse_double(p));
  if (grid.size() < 2) throw std::invalid_argument("grid needs at least 2 thresholds");
  return grid;
}

namespace {

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw std::invalid_argument("cannot write " + path);
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

io::LoadResult load_input(const std::string& path, const std::string& clock, std::ostream& err) {
  io::LoadOptions opts;
  opts.clock_bias_source =
      clock == "wls" ? io::ClockBiasSource::wls_estimate : io::ClockBiasSource::column;
  io::LoadResult loaded = io::load_epochs(path, opts);
  for (const std::string& w : loaded.warnings) err << "warning: " << w << '\n';
  return loaded;
}

eval::MethodSettings method_settings(std::optional<int> max_faults, FdeMethod method) {
  eval::MethodSettings s;
  s.edm.max_faults = max_faults;
  s.residual.max_faults = max_faults;
  if (max_faults && method == FdeMethod::ss) s.ss.max_faults = *max_faults;
  return s;
}

unsigned worker_count(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

const CLI::IsMember kMethodNames({"edm", "edm2021", "residual", "ss"});

}  // namespace

int cli_dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fault detection and exclusion for GNSS pseudoranges", "edmfde"};
  app.require_subcommand(1);

  std::string in_path, out_path, config_path, clock = "column", grid_spec = "sim";
  std::optional<std::uint64_t> seed;
  std::optional<int> max_faults, sim_faults;
  std::optional<double> sim_bias, sim_noise, sim_duration;
  std::string method_name;
  std::vector<std::string> bench_methods;
  std::vector<double> bench_thresholds;
  double threshold = 0.0;
  int workers = 0, repeats = 1, f = 4, k = 10, m_min = 10, m_max = 100;

  const auto add_method = [&](CLI::App* cmd) {
    cmd->add_option("--method", method_name, "edm | edm2021 | residual | ss")
        ->required()
        ->check(kMethodNames);
  };
  const auto add_input = [&](CLI::App* cmd) {
    cmd->add_option("--in", in_path, "Measurement CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--clock", clock, "Receiver clock source")
        ->check(CLI::IsMember({"column", "wls"}));
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Scenario config -> measurement CSV");
  simulate->add_option("--config", config_path, "JSON scenario (defaults when omitted)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--faults", sim_faults, "Override fault_count");
  simulate->add_option("--bias", sim_bias, "Override fault_bias_m");
  simulate->add_option("--noise", sim_noise, "Override noise_sigma_m");
  simulate->add_option("--duration-h", sim_duration, "Override duration_h");

  CLI::App* fde = app.add_subcommand("fde", "Measurement CSV -> flag CSV");
  add_method(fde);
  add_input(fde);
  fde->add_option("--threshold", threshold, "Detection threshold")->required();

  CLI::App* roc = app.add_subcommand("roc", "Measurement CSV -> ROC/AUC CSV");
  add_method(roc);
  add_input(roc);
  roc->add_option("--grid", grid_spec, "sim | default | log:LO:HI:N | comma list");

  CLI::App* sweep = app.add_subcommand("sweep", "Measurement CSV -> threshold vs error CSV");
  add_method(sweep);
  add_input(sweep);
  sweep->add_option("--grid", grid_spec, "sim | default | log:LO:HI:N | comma list");

  CLI::App* bench = app.add_subcommand("bench", "Measurement CSV -> timing CSV");
  bench->add_option("--method", bench_methods, "Method, repeatable")
      ->required()
      ->check(kMethodNames);
  bench->add_option("--threshold", bench_thresholds, "One threshold per --method")->required();
  add_input(bench);
  bench->add_option("--repeats", repeats, "Timed runs per epoch")->check(CLI::PositiveNumber);

  CLI::App* complexity = app.add_subcommand("complexity", "Theoretical operation counts CSV");
  complexity->add_option("--f", f, "Fault hypotheses")->check(CLI::NonNegativeNumber);
  complexity->add_option("--k", k, "Residual iterations")->check(CLI::Range(2, 21));
  complexity->add_option("--m-min", m_min, "Smallest measurement count");
  complexity->add_option("--m-max", m_max, "Largest measurement count");

  for (CLI::App* cmd : {simulate, fde, roc, sweep, bench, complexity}) {
    cmd->add_option("--out", out_path, "Output CSV (stdout when omitted)");
    cmd->add_option("--seed", seed, "Random seed");
  }
  for (CLI::App* cmd : {fde, roc, sweep, bench}) {
    cmd->add_option("--max-faults", max_faults, "Exclusion cap")->check(CLI::PositiveNumber);
    cmd->add_option("--workers", workers, "Sweep threads (0 = all cores)");
  }

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const std::string& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInputError;
  }

  try {
    Sink sink(out_path, out);
    std::ostream& os = sink.get();
    os.precision(17);

    if (simulate->parsed()) {
      sim::ScenarioConfig cfg =
          config_path.empty() ? sim::default_scenario() : io::load_scenario(config_path);
      if (seed) cfg.seed = *seed;
      if (sim_faults) cfg.fault_count = *sim_faults;
      if (sim_bias) cfg.fault_bias_m = *sim_bias;
      if (sim_noise) cfg.noise_sigma_m = *sim_noise;
      if (sim_duration) cfg.duration_h = *sim_duration;
      const sim::Simulation s = sim::simulate(cfg);
      for (const sim::SkippedEpoch& sk : s.skipped) {
        err << "warning: skipped " << cfg.locations[sk.location_index].name << " epoch "
            << sk.epoch_index << ": " << sk.reason << '\n';
      }
      io::write_measurements(os, s.epochs);
      return kExitOk;
    }

    if (complexity->parsed()) {
      const auto curves = eval::complexity_curves(m_min, m_max, f, k);
      os << "m,f,k,edm,residual,ss\n";
      for (const eval::ComplexityPoint& p : curves) {
        os << p.m << ',' << f << ',' << k << ',' << p.edm << ',' << p.residual << ',' << p.ss
           << '\n';
      }
      return kExitOk;
    }

    const FdeMethod method = parse_method(method_name.empty() ? "edm" : method_name);
    const io::LoadResult loaded = load_input(in_path, clock, err);
    const std::vector<EpochSet>& epochs = loaded.epochs;

    if (fde->parsed()) {
      const eval::MethodSettings settings = method_settings(max_faults, method);
      const double grid[] = {threshold};
      const auto runs = eval::sweep(epochs, method, grid, settings, worker_count(workers));
      io::write_flags(os, epochs, runs.front().results);
      return kExitOk;
    }

    if (roc->parsed()) {
      const std::vector<double> grid = parse_grid(grid_spec, method);
      const auto runs = eval::sweep(epochs, method, grid, method_settings(max_faults, method),
                                    worker_count(workers));
      const auto points = eval::roc_curve(epochs, runs);
      const double area = eval::auc(points);
      os << "method,threshold,true_positive_rate,false_alarm_rate,auc\n";
      for (const eval::RocPoint& p : points) {
        os << to_string(method) << ',' << io::format_double(p.threshold) << ','
           << io::format_double(p.true_positive_rate) << ','
           << io::format_double(p.false_alarm_rate) << ',' << io::format_double(area) << '\n';
      }
      return kExitOk;
    }

    if (sweep->parsed()) {
      const std::vector<double> grid = parse_grid(grid_spec, method);
      const auto runs = eval::sweep(epochs, method, grid, method_settings(max_faults, method),
                                    worker_count(workers));
      std::vector<double> metric;
      for (const eval::ThresholdRun& run : runs) {
        const auto traces = eval::collect_horizontal_errors(epochs, run.results);
        metric.push_back(eval::horizontal_error_metric(traces).grand_mean);
      }
      std::size_t next = 0;
      const eval::Calibration cal =
          eval::calibrate_threshold(grid, [&](double) { return metric[next++]; });
      const double baseline =
          eval::horizontal_error_metric(eval::all_in_view_horizontal_errors(epochs)).grand_mean;
      os << "method,threshold,grand_mean_m,calibrated\n";
      for (std::size_t i = 0; i < grid.size(); ++i) {
        os << to_string(method) << ',' << io::format_double(grid[i]) << ','
           << io::format_double(metric[i]) << ',' << (i == cal.best_index ? 1 : 0) << '\n';
      }
      os << "none,," << io::format_double(baseline) << ",0\n";
      return kExitOk;
    }

    if (bench->parsed()) {
      if (bench_methods.size() != bench_thresholds.size()) {
        throw std::invalid_argument("bench needs one --threshold per --method");
      }
      os << "method,group,key,count,mean_s,std_s\n";
      for (std::size_t i = 0; i < bench_methods.size(); ++i) {
        const FdeMethod mth = parse_method(bench_methods[i]);
        const eval::TimingProfile prof = eval::timing_profile(
            mth, epochs, bench_thresholds[i], method_settings(max_faults, mth), repeats);
        const auto emit = [&](const char* group, const std::vector<eval::GroupStats>& stats) {
          for (const eval::GroupStats& g : stats) {
            os << to_string(mth) << ',' << group << ',' << g.key << ',' << g.count << ','
               << io::format_double(g.mean_s) << ',' << io::format_double(g.std_s) << '\n';
          }
        };
        emit("measurements", prof.by_measurements);
        emit("faults", prof.by_faults);
      }
      return kExitOk;
    }
  } catch (const FdeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
  err << app.help();
  return kExitInputError;
}

}  // namespace edmfde::cli
