#pragma once

#include "edmfde/matrix_kernels.hpp"

namespace edmfde::geodesy {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

// WGS-84
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);

inline constexpr double kEarthMu = 3.986004418e14;        // m^3/s^2
inline constexpr double kEarthRotation = 7.2921151467e-5;  // rad/s

struct Geodetic {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double alt_m = 0.0;
};

Vec3 geodetic_to_ecef(const Geodetic& llh);

/// Rows are the East, North, Up unit vectors at the given latitude/longitude.
Eigen::Matrix3d ecef_to_enu_rotation(double lat_deg, double lon_deg);

/// Inverse of geodetic_to_ecef (Bowring iteration).
Geodetic ecef_to_geodetic(const Vec3& ecef);

/// ENU components of `point - origin` in the frame at `origin`.
Vec3 enu_offset(const Vec3& origin, const Vec3& point);

/// Elevation in degrees of `target` seen from `origin`.
double elevation_deg(const Geodetic& origin, const Vec3& target);

/// Norm of the East/North components of `estimate - truth` at `truth`.
double horizontal_error(const Vec3& estimate, const Vec3& truth);

}  // namespace edmfde::geodesy
