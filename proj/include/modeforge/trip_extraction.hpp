#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "modeforge/error.hpp"
#include "modeforge/geo.hpp"
#include "modeforge/mode.hpp"

namespace modeforge {

struct FilterConfig {
  double min_accuracy = 100.0;    // meters; larger accuracy values are dropped
  double max_jump_speed = 150.0;  // m/s

  void validate() const {
    if (!(std::isfinite(min_accuracy) && min_accuracy > 0.0) ||
        !(std::isfinite(max_jump_speed) && max_jump_speed > 0.0)) {
      throw Error(ErrorKind::Config, "filter thresholds must be positive and finite");
    }
  }
};

struct StayRegionConfig {
  double max_roam_distance = 100.0;  // D, meters
  double min_dwell_time = 300.0;     // T, seconds
  double max_speed = 1.5;            // V, m/s

  void validate() const {
    if (!(max_roam_distance > 0.0) || !(min_dwell_time > 0.0) || !(max_speed >= 0.0) ||
        !std::isfinite(max_roam_distance) || !std::isfinite(min_dwell_time) ||
        !std::isfinite(max_speed)) {
      throw Error(ErrorKind::Config, "stay-region config needs D > 0, T > 0, V >= 0");
    }
  }
};

struct TripSplitConfig {
  double max_distance_from = 2000.0;  // meters
  double max_speed_from = 69.4;       // m/s (250 km/h)
  double max_time_from = 1800.0;      // seconds

  void validate() const {
    if (!(max_distance_from > 0.0) || !(max_speed_from > 0.0) || !(max_time_from > 0.0) ||
        !std::isfinite(max_distance_from) || !std::isfinite(max_speed_from) ||
        !std::isfinite(max_time_from)) {
      throw Error(ErrorKind::Config, "trip-split thresholds must be positive and finite");
    }
  }
};

/// Closed index range [first, last] of a PointSequence.
struct StayRegion {
  std::string device_id;
  std::size_t first = 0;
  std::size_t last = 0;
  LatLon anchor;
  double entry_time = 0.0;
  double exit_time = 0.0;

  friend bool operator==(const StayRegion&, const StayRegion&) = default;
};

enum class LabelSource { GroundTruth, Imputed };

inline const char* to_string(LabelSource s) {
  return s == LabelSource::GroundTruth ? "ground_truth" : "imputed";
}

struct Trip {
  std::string trip_id;
  std::string device_id;
  std::vector<LocationPoint> points;
  /// Index of points.front() in the device's (filtered) sequence.
  std::size_t first_index = 0;
  std::optional<Mode> mode_label;
  LabelSource label_source = LabelSource::GroundTruth;

  LatLon origin() const { return points.front().position(); }
  LatLon destination() const { return points.back().position(); }
  double start_time() const { return points.front().timestamp; }
  double end_time() const { return points.back().timestamp; }
};

inline std::string make_trip_id(const std::string& device_id, std::size_t ordinal) {
  return device_id + ":" + std::to_string(ordinal);
}

/// Drops low-accuracy fixes, then drops any fix implying a jump faster than
/// max_jump_speed from the previously retained fix.
inline PointSequence filter_points(const PointSequence& seq, const FilterConfig& cfg) {
  cfg.validate();
  std::vector<LocationPoint> kept;
  kept.reserve(seq.size());
  for (const auto& p : seq.points()) {
    if (p.accuracy && *p.accuracy > cfg.min_accuracy) continue;
    if (!kept.empty() && pairwise_speed(kept.back(), p) > cfg.max_jump_speed) continue;
    kept.push_back(p);
  }
  return PointSequence(seq.device_id(), std::move(kept));
}

/// Per-point speeds for the stay-region speed constraint: the recorded
/// instantaneous speed, else the pairwise speed from the previous fix
/// (0 for the first fix).
inline std::vector<double> effective_speeds(const PointSequence& seq) {
  std::vector<double> v(seq.size(), 0.0);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i].speed) {
      v[i] = *seq[i].speed;
    } else if (i > 0) {
      v[i] = pairwise_speed(seq[i - 1], seq[i]);
    }
  }
  return v;
}

/// Greedy left-to-right stay-region scan. The first unconsumed point is the
/// anchor; the run grows while every member is within D of the anchor and no
/// faster than V; the run is a region iff it spans at least T seconds.
/// On failure the anchor advances by one point.
inline std::vector<StayRegion> detect_stay_regions(const PointSequence& seq,
                                                   const StayRegionConfig& cfg) {
  cfg.validate();
  const auto speed = effective_speeds(seq);
  const std::size_t n = seq.size();
  std::vector<StayRegion> regions;
  std::size_t i = 0;
  while (i < n) {
    if (speed[i] > cfg.max_speed) {
      ++i;
      continue;
    }
    const LatLon anchor = seq[i].position();
    std::size_t j = i;
    while (j + 1 < n && speed[j + 1] <= cfg.max_speed &&
           haversine_distance(anchor, seq[j + 1].position()) <= cfg.max_roam_distance) {
      ++j;
    }
    if (seq[j].timestamp - seq[i].timestamp >= cfg.min_dwell_time) {
      regions.push_back({seq.device_id(), i, j, anchor, seq[i].timestamp, seq[j].timestamp});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return regions;
}

namespace detail {

inline Trip make_trip(const PointSequence& seq, std::size_t first, std::size_t last,
                      std::size_t ordinal) {
  Trip t;
  t.trip_id = make_trip_id(seq.device_id(), ordinal);
  t.device_id = seq.device_id();
  t.first_index = first;
  t.points.assign(seq.points().begin() + static_cast<std::ptrdiff_t>(first),
                  seq.points().begin() + static_cast<std::ptrdiff_t>(last) + 1);
  return t;
}

}  // namespace detail

/// Trips are the runs between consecutive stay regions: each starts at the
/// exit fix of the preceding region (or the sequence start) and ends at the
/// entry fix of the following region (or the sequence end). A run is kept
/// only if it holds at least one fix outside every region and two fixes in
/// total.
inline std::vector<Trip> split_by_stay_regions(const PointSequence& seq,
                                               const std::vector<StayRegion>& regions) {
  std::vector<Trip> trips;
  const std::size_t n = seq.size();
  if (n < 2) return trips;

  std::size_t ordinal = 0;
  auto emit = [&](std::size_t a, bool a_in_region, std::size_t b, bool b_in_region) {
    if (b <= a) return;
    const std::size_t interior = b - a - 1 + (a_in_region ? 0 : 1) + (b_in_region ? 0 : 1);
    if (interior == 0) return;
    trips.push_back(detail::make_trip(seq, a, b, ordinal++));
  };

  std::size_t cursor = 0;
  bool cursor_in_region = false;
  for (const auto& r : regions) {
    emit(cursor, cursor_in_region, r.first, true);
    cursor = r.last;
    cursor_in_region = true;
  }
  emit(cursor, cursor_in_region, n - 1, false);
  return trips;
}

/// Consecutive-observation splitter: the next fix stays in the current trip
/// iff its distance, elapsed time and implied speed from the current fix are
/// all within the thresholds. Single-fix trips are discarded.
inline std::vector<Trip> split_by_thresholds(const PointSequence& seq,
                                             const TripSplitConfig& cfg) {
  cfg.validate();
  std::vector<Trip> trips;
  const std::size_t n = seq.size();
  if (n < 2) return trips;

  std::size_t ordinal = 0;
  std::size_t start = 0;
  auto close = [&](std::size_t end) {
    if (end > start) trips.push_back(detail::make_trip(seq, start, end, ordinal));
    ++ordinal;  // ids are assigned even to runs that get removed
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dist = haversine_distance(seq[i].position(), seq[i + 1].position());
    const double dt = seq[i + 1].timestamp - seq[i].timestamp;
    bool same = true;
    if (dt > 0.0) {
      same = dist <= cfg.max_distance_from && dt <= cfg.max_time_from &&
             dist / dt <= cfg.max_speed_from;
    }
    if (!same) {
      close(i);
      start = i + 1;
    }
  }
  close(n - 1);
  return trips;
}

}  // namespace modeforge
