#include "edmfde/geodesy.hpp"

#include <algorithm>
#include <cmath>

namespace edmfde::geodesy {

Vec3 geodetic_to_ecef(const Geodetic& llh) {
  const double lat = llh.lat_deg * kDegToRad;
  const double lon = llh.lon_deg * kDegToRad;
  const double sin_lat = std::sin(lat);
  const double prime_vertical = kSemiMajor / std::sqrt(1.0 - kEccentricitySq * sin_lat * sin_lat);
  const double horizontal = (prime_vertical + llh.alt_m) * std::cos(lat);
  return {horizontal * std::cos(lon), horizontal * std::sin(lon),
          (prime_vertical * (1.0 - kEccentricitySq) + llh.alt_m) * sin_lat};
}

Eigen::Matrix3d ecef_to_enu_rotation(double lat_deg, double lon_deg) {
  const double lat = lat_deg * kDegToRad;
  const double lon = lon_deg * kDegToRad;
  const double sl = std::sin(lat);
  const double cl = std::cos(lat);
  const double so = std::sin(lon);
  const double co = std::cos(lon);
  Eigen::Matrix3d r;
  r << -so, co, 0.0,
       -sl * co, -sl * so, cl,
       cl * co, cl * so, sl;
  return r;
}

Geodetic ecef_to_geodetic(const Vec3& ecef) {
  const double p = std::hypot(ecef.x(), ecef.y());
  const double lon = std::atan2(ecef.y(), ecef.x());
  double lat = std::atan2(ecef.z(), p * (1.0 - kEccentricitySq));
  double alt = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double sin_lat = std::sin(lat);
    const double n = kSemiMajor / std::sqrt(1.0 - kEccentricitySq * sin_lat * sin_lat);
    alt = p / std::cos(lat) - n;
    lat = std::atan2(ecef.z(), p * (1.0 - kEccentricitySq * n / (n + alt)));
  }
  return {lat * kRadToDeg, lon * kRadToDeg, alt};
}

Vec3 enu_offset(const Vec3& origin, const Vec3& point) {
  const Geodetic llh = ecef_to_geodetic(origin);
  return ecef_to_enu_rotation(llh.lat_deg, llh.lon_deg) * (point - origin);
}

double elevation_deg(const Geodetic& origin, const Vec3& target) {
  const Vec3 los = target - geodetic_to_ecef(origin);
  const Vec3 enu = ecef_to_enu_rotation(origin.lat_deg, origin.lon_deg) * los.normalized();
  return std::asin(std::clamp(enu.z(), -1.0, 1.0)) * kRadToDeg;
}

double horizontal_error(const Vec3& estimate, const Vec3& truth) {
  const Vec3 enu = enu_offset(truth, estimate);
  return std::hypot(enu.x(), enu.y());
}

}  // namespace edmfde::geodesy
