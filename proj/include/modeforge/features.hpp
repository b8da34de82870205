#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "modeforge/error.hpp"
#include "modeforge/geo.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/network.hpp"
#include "modeforge/trip_extraction.hpp"

namespace modeforge {

/// Column order of every raw/normalized feature row.
enum class Feature : std::size_t {
  TripDistance = 0,
  TripTime,
  OdEuclidean,
  AvgSpeed,
  MaxInstantSpeed,
  SpeedQ05,
  SpeedQ25,
  SpeedQ50,
  SpeedQ75,
  SpeedQ95,
  AvgRecordRate,
  AvgDistRail,
  AvgDistBus,
  AvgDistHighway,
};

inline constexpr std::size_t kNumTrajectoryFeatures = 11;
inline constexpr std::size_t kNumFeatures = 14;

inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "trip_distance", "trip_time",   "od_euclidean", "avg_speed",       "max_instant_speed",
    "speed_q05",     "speed_q25",   "speed_q50",    "speed_q75",       "speed_q95",
    "avg_record_rate", "avg_dist_rail", "avg_dist_bus", "avg_dist_highway"};

struct TrajectoryFeatures {
  double trip_distance = 0.0;
  double trip_time = 0.0;
  double od_euclidean = 0.0;
  double avg_speed = 0.0;
  double max_instant_speed = 0.0;
  double speed_q05 = 0.0;
  double speed_q25 = 0.0;
  double speed_q50 = 0.0;
  double speed_q75 = 0.0;
  double speed_q95 = 0.0;
  double avg_record_rate = 0.0;
};

struct NetworkFeatures {
  double avg_dist_rail = 0.0;
  double avg_dist_bus = 0.0;
  double avg_dist_highway = 0.0;
};

using RawFeatures = std::array<double, kNumFeatures>;

struct FeatureVector {
  std::string trip_id;
  RawFeatures raw{};
  RawFeatures normalized{};
  std::optional<Mode> label;
};

/// Linear interpolation between order statistics ("type 7").
/// `sorted` must be ascending and non-empty; q in [0, 1].
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Speed sample for the max/quantile features: recorded instantaneous speeds
/// when every fix carries one, otherwise speeds between successive fixes.
inline std::vector<double> speed_sample(const Trip& trip) {
  const auto& pts = trip.points;
  const bool all_recorded =
      std::all_of(pts.begin(), pts.end(), [](const LocationPoint& p) { return p.speed.has_value(); });
  std::vector<double> v;
  if (all_recorded) {
    v.reserve(pts.size());
    for (const auto& p : pts) v.push_back(*p.speed);
  } else {
    v.reserve(pts.size() - 1);
    for (std::size_t i = 1; i < pts.size(); ++i) v.push_back(pairwise_speed(pts[i - 1], pts[i]));
  }
  return v;
}

inline TrajectoryFeatures trajectory_features(const Trip& trip) {
  const auto& pts = trip.points;
  if (pts.size() < 2) {
    throw Error(ErrorKind::DegenerateTrip, "trip '" + trip.trip_id + "' has fewer than 2 points");
  }
  TrajectoryFeatures f;
  f.trip_time = pts.back().timestamp - pts.front().timestamp;
  if (!(f.trip_time > 0.0)) {
    throw Error(ErrorKind::DegenerateTrip, "trip '" + trip.trip_id + "' has zero duration");
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    f.trip_distance += haversine_distance(pts[i - 1].position(), pts[i].position());
  }
  f.od_euclidean = haversine_distance(pts.front().position(), pts.back().position());
  f.avg_speed = f.trip_distance / f.trip_time;

  auto speeds = speed_sample(trip);
  std::sort(speeds.begin(), speeds.end());
  f.max_instant_speed = speeds.back();
  f.speed_q05 = quantile_sorted(speeds, 0.05);
  f.speed_q25 = quantile_sorted(speeds, 0.25);
  f.speed_q50 = quantile_sorted(speeds, 0.50);
  f.speed_q75 = quantile_sorted(speeds, 0.75);
  f.speed_q95 = quantile_sorted(speeds, 0.95);
  f.avg_record_rate = static_cast<double>(pts.size()) / f.trip_time;
  return f;
}

inline double nearest_line_distance(const LatLon& p, const ModalNetwork& net) {
  return net.nearest_distance(p);
}

inline double mean_nearest_distance(const Trip& trip, const ModalNetwork& net) {
  if (trip.points.empty()) {
    throw Error(ErrorKind::DegenerateTrip, "trip '" + trip.trip_id + "' has no points");
  }
  double sum = 0.0;
  for (const auto& p : trip.points) sum += net.nearest_distance(p.position());
  return sum / static_cast<double>(trip.points.size());
}

inline NetworkFeatures network_features(const Trip& trip, const ModalNetwork& rail,
                                        const ModalNetwork& bus, const ModalNetwork& highway) {
  return {mean_nearest_distance(trip, rail), mean_nearest_distance(trip, bus),
          mean_nearest_distance(trip, highway)};
}

inline RawFeatures assemble(const TrajectoryFeatures& t, const NetworkFeatures& n) {
  return {t.trip_distance, t.trip_time, t.od_euclidean, t.avg_speed, t.max_instant_speed,
          t.speed_q05,     t.speed_q25, t.speed_q50,    t.speed_q75, t.speed_q95,
          t.avg_record_rate, n.avg_dist_rail, n.avg_dist_bus, n.avg_dist_highway};
}

inline FeatureVector extract_features(const Trip& trip, const NetworkSet& networks) {
  FeatureVector fv;
  fv.trip_id = trip.trip_id;
  fv.raw = assemble(trajectory_features(trip),
                    network_features(trip, networks.rail, networks.bus, networks.highway));
  fv.label = trip.mode_label;
  return fv;
}

/// Which feature columns enter a model. Trajectory features always do.
struct FeatureSelection {
  bool rail = true;
  bool bus = true;
  bool highway = true;

  static FeatureSelection trajectory_only() { return {false, false, false}; }

  bool uses_network() const { return rail || bus || highway; }

  std::vector<std::size_t> columns() const {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < kNumTrajectoryFeatures; ++i) c.push_back(i);
    if (rail) c.push_back(static_cast<std::size_t>(Feature::AvgDistRail));
    if (bus) c.push_back(static_cast<std::size_t>(Feature::AvgDistBus));
    if (highway) c.push_back(static_cast<std::size_t>(Feature::AvgDistHighway));
    return c;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (auto c : columns()) n.emplace_back(kFeatureNames[c]);
    return n;
  }

  friend bool operator==(const FeatureSelection&, const FeatureSelection&) = default;
};

/// Min-max scaling to [0, 1] with statistics from training rows only.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  FeatureScaler(std::vector<double> min, std::vector<double> max)
      : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) {
      throw Error(ErrorKind::Dimension, "scaler min/max length mismatch");
    }
    for (std::size_t j = 0; j < min_.size(); ++j) {
      if (!(max_[j] >= min_[j])) throw Error(ErrorKind::InvalidArgument, "scaler max < min");
    }
  }

  template <typename Rows>
  static FeatureScaler fit(const Rows& rows) {
    if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "cannot fit scaler on empty matrix");
    const std::size_t d = rows.front().size();
    std::vector<double> mn(rows.front().begin(), rows.front().end());
    std::vector<double> mx = mn;
    for (const auto& r : rows) {
      if (r.size() != d) throw Error(ErrorKind::Dimension, "ragged feature matrix");
      for (std::size_t j = 0; j < d; ++j) {
        mn[j] = std::min(mn[j], r[j]);
        mx[j] = std::max(mx[j], r[j]);
      }
    }
    return FeatureScaler(std::move(mn), std::move(mx));
  }

  std::size_t dimension() const { return min_.size(); }
  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

  double apply(std::size_t j, double x) const {
    const double range = max_[j] - min_[j];
    if (!(range > 0.0)) return 0.0;
    return std::clamp((x - min_[j]) / range, 0.0, 1.0);
  }

  double invert(std::size_t j, double y) const { return min_[j] + y * (max_[j] - min_[j]); }

  template <typename Row>
  std::vector<double> apply(const Row& x) const {
    if (static_cast<std::size_t>(x.size()) != dimension()) {
      throw Error(ErrorKind::Dimension, "feature row has " + std::to_string(x.size()) +
                                            " values, scaler expects " +
                                            std::to_string(dimension()));
    }
    std::vector<double> out(dimension());
    for (std::size_t j = 0; j < dimension(); ++j) out[j] = apply(j, x[j]);
    return out;
  }

  template <typename Row>
  std::vector<double> invert(const Row& y) const {
    std::vector<double> out(dimension());
    for (std::size_t j = 0; j < dimension(); ++j) out[j] = invert(j, y[j]);
    return out;
  }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

/// Selected raw columns of one feature vector.
inline std::vector<double> select(const RawFeatures& raw, const std::vector<std::size_t>& columns) {
  std::vector<double> out;
  out.reserve(columns.size());
  for (auto c : columns) out.push_back(raw[c]);
  return out;
}

/// Fills every vector's `normalized` field with a scaler fitted on all 14
/// raw columns of `rows`; returns that scaler.
inline FeatureScaler normalize_in_place(std::vector<FeatureVector>& rows) {
  std::vector<RawFeatures> raw;
  raw.reserve(rows.size());
  for (const auto& r : rows) raw.push_back(r.raw);
  auto scaler = FeatureScaler::fit(raw);
  for (auto& r : rows) {
    auto n = scaler.apply(r.raw);
    std::copy(n.begin(), n.end(), r.normalized.begin());
  }
  return scaler;
}

}  // namespace modeforge
