#include "edmfde/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "edmfde/errors.hpp"
#include "edmfde/residual_fde.hpp"

namespace edmfde::io {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (text.empty() || res.ec != std::errc{} || res.ptr != last) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

enum Col : std::size_t {
  kTime, kTrace, kSv, kConstellation, kPr, kIono, kTropo, kSatClock, kConstelBias,
  kSatX, kSatY, kSatZ, kWeight, kMultipath, kTruthFault, kTruthX, kTruthY, kTruthZ, kRxClock,
  kColumnCount
};
constexpr std::size_t kRequiredColumns = 13;

struct RowReader {
  std::vector<std::string_view> fields;
  std::vector<std::optional<std::size_t>> index;
  std::size_t line = 0;

  std::string_view text(Col c) const {
    const auto& i = index[c];
    return i ? fields[*i] : std::string_view{};
  }

  [[noreturn]] void fail(Col c, const std::string& why) const {
    throw ParseError("line " + std::to_string(line) + ", column " +
                         std::string(kMeasurementColumns[c]) + ": " + why,
                     line);
  }

  double number(Col c) const {
    double v = 0.0;
    try {
      v = parse_double(text(c));
    } catch (const std::invalid_argument& e) {
      fail(c, e.what());
    }
    if (!std::isfinite(v)) fail(c, "value is not finite");
    return v;
  }

  std::optional<double> optional_number(Col c) const {
    if (text(c).empty()) return std::nullopt;
    return number(c);
  }

  std::optional<bool> optional_flag(Col c) const {
    const std::string_view t = text(c);
    if (t.empty()) return std::nullopt;
    if (t == "0") return false;
    if (t == "1") return true;
    fail(c, "expected 0 or 1, got '" + std::string(t) + "'");
  }

  std::string string(Col c) const {
    const std::string_view t = text(c);
    if (t.empty()) fail(c, "empty value");
    return std::string(t);
  }
};

struct PendingEpoch {
  EpochSet epoch;
  std::size_t first_line = 0;
  std::set<std::string> sv_ids;
};

bool same_position(const std::optional<Vec3>& a, const std::optional<Vec3>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || *a == *b;
}

}  // namespace

LoadResult read_measurements(std::istream& in, const LoadOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  strip_cr(line);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  std::vector<std::optional<std::size_t>> index(kColumnCount);
  const auto header = split(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (header[i] != kMeasurementColumns[c]) continue;
      if (index[c]) throw ParseError("duplicate column " + std::string(header[i]), 1);
      index[c] = i;
    }
  }
  for (std::size_t c = 0; c < kRequiredColumns; ++c) {
    if (!index[c]) throw ParseError("missing column " + std::string(kMeasurementColumns[c]), 1);
  }

  std::vector<PendingEpoch> pending;
  std::map<std::pair<std::string, double>, std::size_t> lookup;
  RowReader row{{}, index, 1};
  std::string buffer;
  while (std::getline(in, buffer)) {
    ++row.line;
    strip_cr(buffer);
    if (buffer.empty()) continue;
    row.fields = split(buffer);
    if (row.fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(row.line) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(row.fields.size()),
                       row.line);
    }

    const double time = row.number(kTime);
    std::string trace = row.string(kTrace);
    Measurement m;
    m.sv_id = row.string(kSv);
    m.constellation = std::string(row.text(kConstellation));
    m.pseudorange_raw = row.number(kPr);
    m.iono_delay = row.number(kIono);
    m.tropo_delay = row.number(kTropo);
    m.sat_clock_bias = row.number(kSatClock);
    m.constellation_bias = row.number(kConstelBias);
    m.sat_pos = Vec3(row.number(kSatX), row.number(kSatY), row.number(kSatZ));
    m.weight = row.number(kWeight);
    if (!(m.weight > 0.0)) row.fail(kWeight, "weight must be positive");
    m.multipath = row.optional_flag(kMultipath);
    m.truth_fault = row.optional_flag(kTruthFault);

    const auto tx = row.optional_number(kTruthX);
    const auto ty = row.optional_number(kTruthY);
    const auto tz = row.optional_number(kTruthZ);
    if (tx.has_value() != ty.has_value() || tx.has_value() != tz.has_value()) {
      row.fail(kTruthX, "truth position needs all three coordinates or none");
    }
    std::optional<Vec3> truth;
    if (tx) truth = Vec3(*tx, *ty, *tz);
    const auto clock = row.optional_number(kRxClock);

    auto key = std::make_pair(trace, time);
    auto [it, inserted] = lookup.try_emplace(key, pending.size());
    if (inserted) {
      PendingEpoch p;
      p.epoch.trace_id = std::move(trace);
      p.epoch.timestamp = time;
      p.epoch.truth_rx_pos = truth;
      p.epoch.rx_clock_bias_est = clock;
      p.first_line = row.line;
      pending.push_back(std::move(p));
    }
    PendingEpoch& p = pending[it->second];
    if (!same_position(p.epoch.truth_rx_pos, truth)) {
      row.fail(kTruthX, "truth position differs within the epoch");
    }
    if (p.epoch.rx_clock_bias_est != clock) {
      row.fail(kRxClock, "receiver clock differs within the epoch");
    }
    if (!p.sv_ids.insert(m.sv_id).second) {
      row.fail(kSv, "duplicate sv_id '" + m.sv_id + "' within the epoch");
    }
    p.epoch.measurements.push_back(std::move(m));
  }

  LoadResult out;
  for (PendingEpoch& p : pending) {
    EpochSet& e = p.epoch;
    if (e.size() < 4) {
      out.warnings.push_back("epoch " + e.trace_id + " @ " + format_double(e.timestamp) +
                             " (line " + std::to_string(p.first_line) + ") has " +
                             std::to_string(e.size()) + " measurements; skipped");
      continue;
    }
    if (options.clock_bias_source == ClockBiasSource::wls_estimate) {
      e.rx_clock_bias_est.reset();
      try {
        e.rx_clock_bias_est = -wls_solve(e).rx_clock_bias;
      } catch (const SingularGeometry&) {
        out.warnings.push_back("epoch " + e.trace_id + " @ " + format_double(e.timestamp) +
                               ": clock estimate failed, using 0");
      }
    }
    out.epochs.push_back(std::move(e));
  }
  return out;
}

LoadResult load_epochs(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  return read_measurements(in, options);
}

namespace {

void check_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") != std::string::npos) {
    throw std::invalid_argument("field '" + s + "' contains a delimiter");
  }
}

std::string flag(const std::optional<bool>& v) {
  if (!v) return {};
  return *v ? "1" : "0";
}

}  // namespace

void write_measurements(std::ostream& out, std::span<const EpochSet> epochs) {
  bool multipath = false, truth_fault = false, truth_pos = false, clock = false;
  for (const EpochSet& e : epochs) {
    truth_pos = truth_pos || e.truth_rx_pos.has_value();
    clock = clock || e.rx_clock_bias_est.has_value();
    for (const Measurement& m : e.measurements) {
      multipath = multipath || m.multipath.has_value();
      truth_fault = truth_fault || m.truth_fault.has_value();
    }
  }

  const auto sep = [&](std::string_view s) { out << ',' << s; };
  out << kMeasurementColumns[0];
  for (std::size_t c = 1; c < kRequiredColumns; ++c) sep(kMeasurementColumns[c]);
  if (multipath) sep(kMeasurementColumns[kMultipath]);
  if (truth_fault) sep(kMeasurementColumns[kTruthFault]);
  if (truth_pos) {
    for (Col c : {kTruthX, kTruthY, kTruthZ}) sep(kMeasurementColumns[c]);
  }
  if (clock) sep(kMeasurementColumns[kRxClock]);
  out << '\n';

  for (const EpochSet& e : epochs) {
    check_field(e.trace_id);
    for (const Measurement& m : e.measurements) {
      check_field(m.sv_id);
      check_field(m.constellation);
      out << format_double(e.timestamp);
      sep(e.trace_id);
      sep(m.sv_id);
      sep(m.constellation);
      for (double v : {m.pseudorange_raw, m.iono_delay, m.tropo_delay, m.sat_clock_bias,
                       m.constellation_bias, m.sat_pos.x(), m.sat_pos.y(), m.sat_pos.z(),
                       m.weight}) {
        sep(format_double(v));
      }
      if (multipath) sep(flag(m.multipath));
      if (truth_fault) sep(flag(m.truth_fault));
      if (truth_pos) {
        for (int k = 0; k < 3; ++k) {
          sep(e.truth_rx_pos ? format_double((*e.truth_rx_pos)(k)) : std::string{});
        }
      }
      if (clock) sep(e.rx_clock_bias_est ? format_double(*e.rx_clock_bias_est) : std::string{});
      out << '\n';
    }
  }
}

void save_epochs(const std::filesystem::path& path, std::span<const EpochSet> epochs) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  write_measurements(out, epochs);
}

void write_flags(std::ostream& out, std::span<const EpochSet> epochs,
                 std::span<const FdeResult> results) {
  if (epochs.size() != results.size()) {
    throw std::invalid_argument("flag output needs one result per epoch");
  }
  out << kFlagColumns[0];
  for (std::size_t c = 1; c < std::size(kFlagColumns); ++c) out << ',' << kFlagColumns[c];
  out << '\n';
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const EpochSet& e = epochs[i];
    const FdeResult& r = results[i];
    if (r.flags.size() != e.size()) {
      throw std::invalid_argument("result for " + e.trace_id + " does not match its epoch");
    }
    const std::string stat =
        r.statistic_trace.empty() ? std::string{} : format_double(r.statistic_trace.back());
    for (std::size_t j = 0; j < e.size(); ++j) {
      const std::string& sv = e.measurements[j].sv_id;
      const std::size_t rank = r.exclusion_rank(sv);
      out << format_double(e.timestamp) << ',' << e.trace_id << ',' << sv << ','
          << to_string(r.method) << ',' << (r.flags[j] ? 1 : 0) << ','
          << (rank > 0 ? std::to_string(rank) : std::string{}) << ',' << stat << '\n';
    }
  }
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || item.key() == k;
    if (!ok) throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

template <typename T>
T read_req(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw std::invalid_argument(where + " is missing '" + key + "'");
  return obj.at(key).get<T>();
}

}  // namespace

sim::ScenarioConfig parse_scenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario config: ") + e.what(), 0);
  }
  sim::ScenarioConfig cfg = sim::default_scenario();
  try {
    reject_unknown(root,
                   {"seed", "epoch_interval_s", "duration_h", "start_time_s", "noise_sigma_m",
                    "fault_bias_m", "fault_count", "locations", "constellations"},
                   "scenario");
    read_opt(root, "seed", cfg.seed);
    read_opt(root, "epoch_interval_s", cfg.epoch_interval_s);
    read_opt(root, "duration_h", cfg.duration_h);
    read_opt(root, "start_time_s", cfg.start_time_s);
    read_opt(root, "noise_sigma_m", cfg.noise_sigma_m);
    read_opt(root, "fault_bias_m", cfg.fault_bias_m);
    read_opt(root, "fault_count", cfg.fault_count);

    if (root.contains("locations")) {
      cfg.locations.clear();
      for (const json& l : root.at("locations")) {
        const std::string where = "location";
        reject_unknown(l, {"name", "lat_deg", "lon_deg", "alt_m", "elevation_mask_deg"}, where);
        sim::Location loc;
        loc.name = read_req<std::string>(l, "name", where);
        loc.llh.lat_deg = read_req<double>(l, "lat_deg", where);
        loc.llh.lon_deg = read_req<double>(l, "lon_deg", where);
        read_opt(l, "alt_m", loc.llh.alt_m);
        read_opt(l, "elevation_mask_deg", loc.elevation_mask_deg);
        cfg.locations.push_back(std::move(loc));
      }
    }
    if (root.contains("constellations")) {
      cfg.constellations.clear();
      for (const json& c : root.at("constellations")) {
        const std::string where = "constellation";
        reject_unknown(c,
                       {"name", "id_prefix", "total_sats", "planes", "phasing", "inclination_deg",
                        "orbit_radius_m", "epoch_raan_deg"},
                       where);
        sim::WalkerSpec w;
        w.name = read_req<std::string>(c, "name", where);
        w.id_prefix = read_req<std::string>(c, "id_prefix", where);
        w.total_sats = read_req<int>(c, "total_sats", where);
        w.planes = read_req<int>(c, "planes", where);
        read_opt(c, "phasing", w.phasing);
        w.inclination_deg = read_req<double>(c, "inclination_deg", where);
        w.orbit_radius_m = read_req<double>(c, "orbit_radius_m", where);
        read_opt(c, "epoch_raan_deg", w.epoch_raan_deg);
        cfg.constellations.push_back(std::move(w));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario config: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("scenario config: ") + e.what(), 0);
  }
  sim::validate(cfg);
  return cfg;
}

sim::ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const sim::ScenarioConfig& cfg) {
  json root;
  root["seed"] = cfg.seed;
  root["epoch_interval_s"] = cfg.epoch_interval_s;
  root["duration_h"] = cfg.duration_h;
  root["start_time_s"] = cfg.start_time_s;
  root["noise_sigma_m"] = cfg.noise_sigma_m;
  root["fault_bias_m"] = cfg.fault_bias_m;
  root["fault_count"] = cfg.fault_count;
  root["locations"] = json::array();
  for (const sim::Location& l : cfg.locations) {
    root["locations"].push_back({{"name", l.name},
                                 {"lat_deg", l.llh.lat_deg},
                                 {"lon_deg", l.llh.lon_deg},
                                 {"alt_m", l.llh.alt_m},
                                 {"elevation_mask_deg", l.elevation_mask_deg}});
  }
  root["constellations"] = json::array();
  for (const sim::WalkerSpec& w : cfg.constellations) {
    root["constellations"].push_back({{"name", w.name},
                                      {"id_prefix", w.id_prefix},
                                      {"total_sats", w.total_sats},
                                      {"planes", w.planes},
                                      {"phasing", w.phasing},
                                      {"inclination_deg", w.inclination_deg},
                                      {"orbit_radius_m", w.orbit_radius_m},
                                      {"epoch_raan_deg", w.epoch_raan_deg}});
  }
  return root.dump(2) + "\n";
}

}  // namespace edmfde::io
