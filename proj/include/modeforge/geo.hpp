#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "modeforge/error.hpp"

namespace modeforge {

/// Mean Earth radius in meters.
inline constexpr double kEarthRadius = 6'371'000.0;

inline constexpr double kDegToRad = M_PI / 180.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct LocationPoint {
  std::string device_id;
  double latitude = 0.0;
  double longitude = 0.0;
  double timestamp = 0.0;  // UTC epoch seconds
  std::optional<double> accuracy;
  std::optional<double> speed;

  LatLon position() const { return {latitude, longitude}; }
};

struct GeoSegment {
  LatLon start;
  LatLon end;
};

inline bool valid_coordinate(const LatLon& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

inline void require_coordinate(const LatLon& p) {
  if (!valid_coordinate(p)) {
    throw Error(ErrorKind::InvalidCoordinate,
                "invalid coordinate (" + std::to_string(p.lat) + ", " +
                    std::to_string(p.lon) + ")");
  }
}

inline void validate_point(const LocationPoint& p) {
  require_coordinate(p.position());
  if (!std::isfinite(p.timestamp)) {
    throw Error(ErrorKind::InvalidArgument, "non-finite timestamp");
  }
  if (p.accuracy && (!std::isfinite(*p.accuracy) || *p.accuracy < 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "accuracy must be finite and >= 0");
  }
  if (p.speed && (!std::isfinite(*p.speed) || *p.speed < 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "speed must be finite and >= 0");
  }
}

/// Great-circle distance in meters.
inline double haversine_distance(const LatLon& a, const LatLon& b) {
  if (!std::isfinite(a.lat) || !std::isfinite(a.lon) || !std::isfinite(b.lat) ||
      !std::isfinite(b.lon)) {
    throw Error(ErrorKind::InvalidCoordinate, "non-finite coordinate");
  }
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadius * std::asin(std::sqrt(h));
}

/// Distance from p to the closest point of s. The segment is projected onto
/// an equirectangular plane centred on p; when the closest point is an
/// endpoint the great-circle distance to it is returned instead, so the
/// result never exceeds either endpoint distance.
inline double segment_point_distance(const LatLon& p, const GeoSegment& s) {
  const double d_start = haversine_distance(p, s.start);
  const double d_end = haversine_distance(p, s.end);
  if (s.start == s.end) return d_start;

  const double kx = kEarthRadius * kDegToRad * std::cos(p.lat * kDegToRad);
  const double ky = kEarthRadius * kDegToRad;
  const double ax = (s.start.lon - p.lon) * kx;
  const double ay = (s.start.lat - p.lat) * ky;
  const double bx = (s.end.lon - p.lon) * kx;
  const double by = (s.end.lat - p.lat) * ky;
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  if (len2 <= 0.0) return std::min(d_start, d_end);

  const double t = -(ax * dx + ay * dy) / len2;
  if (t <= 0.0) return d_start;
  if (t >= 1.0) return d_end;
  const double fx = ax + t * dx;
  const double fy = ay + t * dy;
  return std::min({std::hypot(fx, fy), d_start, d_end});
}

/// Average speed between two fixes (m/s); requires b strictly after a.
inline double pairwise_speed(const LocationPoint& a, const LocationPoint& b) {
  const double dt = b.timestamp - a.timestamp;
  if (!(dt > 0.0)) {
    throw Error(ErrorKind::UndefinedSpeed,
                "pairwise speed needs a positive time delta, got " +
                    std::to_string(dt));
  }
  return haversine_distance(a.position(), b.position()) / dt;
}

/// Time-ordered fixes of one device with unique timestamps.
class PointSequence {
 public:
  PointSequence() = default;

  /// Sorts by timestamp (stable) and keeps the first record of each
  /// duplicated timestamp. Throws if a point belongs to another device or is
  /// out of range.
  PointSequence(std::string device_id, std::vector<LocationPoint> points)
      : device_id_(std::move(device_id)) {
    for (const auto& p : points) {
      if (p.device_id != device_id_) {
        throw Error(ErrorKind::InvalidArgument,
                    "point of device '" + p.device_id +
                        "' in sequence of device '" + device_id_ + "'");
      }
      validate_point(p);
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const LocationPoint& a, const LocationPoint& b) {
                       return a.timestamp < b.timestamp;
                     });
    points_.reserve(points.size());
    for (auto& p : points) {
      if (!points_.empty() && points_.back().timestamp == p.timestamp) continue;
      points_.push_back(std::move(p));
    }
  }

  const std::string& device_id() const { return device_id_; }
  const std::vector<LocationPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const LocationPoint& operator[](std::size_t i) const { return points_[i]; }

 private:
  std::string device_id_;
  std::vector<LocationPoint> points_;
};

}  // namespace modeforge
