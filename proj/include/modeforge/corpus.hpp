#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modeforge/error.hpp"
#include "modeforge/geo.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/parallel.hpp"
#include "modeforge/trip_extraction.hpp"

namespace modeforge {

/// A labeled trip span for one device.
struct GroundTruthTrip {
  std::string trip_id;
  std::string device_id;
  Mode mode = Mode::Car;
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t n_points = 0;

  double duration() const { return end_time - start_time; }
};

/// Groups points by device; devices come out in lexicographic id order.
inline std::vector<PointSequence> group_by_device(const std::vector<LocationPoint>& points) {
  std::map<std::string, std::vector<LocationPoint>> by;
  for (const auto& p : points) by[p.device_id].push_back(p);
  std::vector<PointSequence> out;
  out.reserve(by.size());
  for (auto& [id, pts] : by) out.emplace_back(id, std::move(pts));
  return out;
}

enum class SegmentMethod { StayRegion, Thresholds };

inline const char* to_string(SegmentMethod m) {
  return m == SegmentMethod::StayRegion ? "stay_region" : "thresholds";
}

inline SegmentMethod parse_segment_method(const std::string& s) {
  if (s == "stay_region") return SegmentMethod::StayRegion;
  if (s == "thresholds") return SegmentMethod::Thresholds;
  throw Error(ErrorKind::Config, "unknown segmentation method '" + s + "'");
}

struct ExtractionConfig {
  FilterConfig filter;
  StayRegionConfig stay;
  TripSplitConfig split;
  SegmentMethod method = SegmentMethod::StayRegion;
};

inline std::vector<PointSequence> filter_devices(const std::vector<PointSequence>& devices,
                                                 const FilterConfig& cfg, std::size_t threads = 1) {
  std::vector<PointSequence> out(devices.size());
  parallel_for(devices.size(), threads,
               [&](std::size_t i) { out[i] = filter_points(devices[i], cfg); });
  return out;
}

/// Trips per device in device order; input sequences are expected to be
/// filtered already.
inline std::vector<Trip> segment_devices(const std::vector<PointSequence>& devices,
                                         const ExtractionConfig& cfg, std::size_t threads = 1) {
  std::vector<std::vector<Trip>> per(devices.size());
  parallel_for(devices.size(), threads, [&](std::size_t i) {
    per[i] = cfg.method == SegmentMethod::StayRegion
                 ? split_by_stay_regions(devices[i], detect_stay_regions(devices[i], cfg.stay))
                 : split_by_thresholds(devices[i], cfg.split);
  });
  std::vector<Trip> trips;
  for (auto& v : per) {
    for (auto& t : v) trips.push_back(std::move(t));
  }
  return trips;
}

inline std::vector<Trip> extract_trips(const std::vector<LocationPoint>& points, const ExtractionConfig& cfg,
                                       std::size_t threads = 1) {
  return segment_devices(filter_devices(group_by_device(points), cfg.filter, threads), cfg, threads);
}

inline double time_overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

namespace detail {

inline std::map<std::string, std::vector<std::size_t>> index_by_device(const std::vector<GroundTruthTrip>& gt) {
  std::map<std::string, std::vector<std::size_t>> m;
  for (std::size_t i = 0; i < gt.size(); ++i) m[gt[i].device_id].push_back(i);
  return m;
}

}  // namespace detail

/// Labels each trip with the mode of the same-device ground-truth span it
/// overlaps most, provided the overlap covers at least `min_fraction` of the
/// shorter of the two. Returns the number of trips labeled.
inline std::size_t label_from_ground_truth(std::vector<Trip>& trips, const std::vector<GroundTruthTrip>& gt,
                                           double min_fraction = 0.5) {
  const auto by_device = detail::index_by_device(gt);
  std::size_t labeled = 0;
  for (auto& t : trips) {
    t.mode_label.reset();
    const auto it = by_device.find(t.device_id);
    if (it == by_device.end()) continue;
    double best = 0.0;
    std::optional<std::size_t> pick;
    for (auto g : it->second) {
      const double ov = time_overlap(t.start_time(), t.end_time(), gt[g].start_time, gt[g].end_time);
      const double shorter = std::min(t.end_time() - t.start_time(), gt[g].duration());
      if (ov > best && ov >= min_fraction * shorter) {
        best = ov;
        pick = g;
      }
    }
    if (pick) {
      t.mode_label = gt[*pick].mode;
      t.label_source = LabelSource::GroundTruth;
      ++labeled;
    }
  }
  return labeled;
}

struct RecoveryStats {
  std::size_t recovered = 0;
  std::size_t total = 0;
  double rate() const { return total ? static_cast<double>(recovered) / static_cast<double>(total) : 0.0; }
};

/// A ground-truth span counts as recovered when one extracted trip of the
/// same device overlaps it by more than `min_fraction` of its duration.
inline RecoveryStats recovery(const std::vector<GroundTruthTrip>& gt, const std::vector<Trip>& trips,
                              double min_fraction = 0.8) {
  std::map<std::string, std::vector<const Trip*>> by;
  for (const auto& t : trips) by[t.device_id].push_back(&t);
  RecoveryStats s;
  s.total = gt.size();
  for (const auto& g : gt) {
    const auto it = by.find(g.device_id);
    if (it == by.end()) continue;
    for (const Trip* t : it->second) {
      if (time_overlap(t->start_time(), t->end_time(), g.start_time, g.end_time) > min_fraction * g.duration()) {
        ++s.recovered;
        break;
      }
    }
  }
  return s;
}

}  // namespace modeforge
