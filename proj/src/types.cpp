#include "edmfde/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace edmfde {

std::size_t EpochSet::truth_fault_count() const {
  return static_cast<std::size_t>(std::count_if(
      measurements.begin(), measurements.end(),
      [](const Measurement& m) { return m.truth_fault.value_or(false); }));
}

bool EpochSet::has_truth_labels() const {
  return !measurements.empty() &&
         std::all_of(measurements.begin(), measurements.end(),
                     [](const Measurement& m) { return m.truth_fault.has_value(); });
}

void validate(const EpochSet& epoch) {
  std::unordered_set<std::string> seen;
  for (const Measurement& m : epoch.measurements) {
    if (!seen.insert(m.sv_id).second) {
      throw std::invalid_argument("duplicate sv_id " + m.sv_id + " in epoch");
    }
    if (!(m.pseudorange_raw > 0.0)) {
      throw std::invalid_argument("non-positive pseudorange for " + m.sv_id);
    }
    if (!(m.weight > 0.0)) {
      throw std::invalid_argument("non-positive weight for " + m.sv_id);
    }
    const double radius = m.sat_pos.norm();
    if (!(radius >= 2.0e7 && radius <= 5.0e7)) {
      throw std::invalid_argument("satellite " + m.sv_id + " outside the orbital sanity band");
    }
  }
}

EpochSet without(const EpochSet& epoch, const std::vector<bool>& drop) {
  EpochSet out = epoch;
  out.measurements.clear();
  for (std::size_t i = 0; i < epoch.measurements.size(); ++i) {
    if (i >= drop.size() || !drop[i]) out.measurements.push_back(epoch.measurements[i]);
  }
  return out;
}

std::string_view to_string(FdeMethod method) {
  switch (method) {
    case FdeMethod::edm: return "edm";
    case FdeMethod::edm2021: return "edm2021";
    case FdeMethod::residual: return "residual";
    case FdeMethod::ss: return "ss";
  }
  return "unknown";
}

FdeMethod parse_method(std::string_view name) {
  if (name == "edm") return FdeMethod::edm;
  if (name == "edm2021") return FdeMethod::edm2021;
  if (name == "residual") return FdeMethod::residual;
  if (name == "ss") return FdeMethod::ss;
  throw std::invalid_argument("unknown FDE method '" + std::string(name) + "'");
}

std::size_t FdeResult::flagged_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

std::size_t FdeResult::exclusion_rank(std::string_view sv_id) const {
  for (std::size_t i = 0; i < exclusion_order.size(); ++i) {
    if (exclusion_order[i] == sv_id) return i + 1;
  }
  return 0;
}

}  // namespace edmfde
