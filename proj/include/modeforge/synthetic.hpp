#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "modeforge/corpus.hpp"
#include "modeforge/error.hpp"
#include "modeforge/geo.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/network.hpp"
#include "modeforge/rng.hpp"

namespace modeforge {

// Synthetic stand-in for a labeled smartphone travel survey. All speed
// profiles, dropout rates and geometry below are generator defaults, not
// measured values.

struct SpeedProfile {
  double cruise_min = 0.0;  // m/s
  double cruise_max = 0.0;
  double stop_spacing_min = 0.0;  // meters between stops; 0 = no stops
  double stop_spacing_max = 0.0;
  double stop_min = 0.0;  // seconds
  double stop_max = 0.0;
  double length_min = 0.0;  // meters
  double length_max = 0.0;
};

struct SyntheticSpec {
  std::size_t total_trips = 2000;
  /// Percent mix in class order (Car, Metro, Bus, Walk).
  std::array<double, kNumModes> mode_mix = {19.3, 52.9, 15.9, 11.9};
  /// Explicit per-mode counts; overrides total_trips/mode_mix when set.
  std::optional<std::array<std::size_t, kNumModes>> counts;

  std::array<SpeedProfile, kNumModes> profiles = {{
      // car: free-flow to arterial speeds, signal stops
      {4.5, 20.0, 300.0, 2000.0, 10.0, 50.0, 3000.0, 20000.0},
      // metro: stations every 1-2 km
      {11.0, 22.0, 1000.0, 2000.0, 20.0, 45.0, 5000.0, 24000.0},
      // bus: frequent stops
      {5.0, 12.0, 300.0, 700.0, 10.0, 50.0, 2000.0, 10000.0},
      // walk
      {1.1, 1.8, 0.0, 0.0, 0.0, 0.0, 1300.0, 3500.0},
  }};
  /// Probability that a car trip spends a stretch in congestion.
  double car_congestion_probability = 0.5;
  /// Shared right-of-way: cars on bus corridors, express buses on highways.
  double car_on_bus_roads = 0.4;
  double bus_on_highway = 0.15;

  double gps_sigma = 8.0;          // meters, per-fix position noise
  double lateral_sigma = 6.0;      // meters, per-trip offset from the followed line
  double moving_interval = 30.0;   // seconds between fixes while moving
  double static_interval_min = 120.0;
  double static_interval_max = 600.0;
  double dwell_min = 1800.0;       // seconds spent at each trip end
  double dwell_max = 7200.0;
  /// Fraction of a metro trip's fixes (arrival fix included in the count)
  /// lost to signal loss, as one contiguous gap.
  double metro_dropout = 0.5;
  /// Probability a moving fix is a low-accuracy fix / a location jump.
  double low_accuracy_rate = 0.01;
  double jump_rate = 0.003;
  std::size_t trips_per_device = 2;
  bool emit_speed = true;
  bool emit_accuracy = true;
  double start_epoch = 1499644800.0;  // 2017-07-10T00:00:00Z
  std::uint64_t seed = 42;

  std::array<std::size_t, kNumModes> mode_counts() const;

  void validate() const {
    for (double p : {car_on_bus_roads, bus_on_highway, car_congestion_probability}) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Config, "synthetic probabilities must be in [0, 1]");
    }
    if (!(metro_dropout >= 0.0 && metro_dropout < 1.0)) {
      throw Error(ErrorKind::Config, "metro_dropout must be in [0, 1)");
    }
    if (trips_per_device < 1) throw Error(ErrorKind::Config, "trips_per_device must be >= 1");
    if (!(moving_interval > 0.0) || !(static_interval_min > 0.0) ||
        !(static_interval_max >= static_interval_min)) {
      throw Error(ErrorKind::Config, "sampling intervals must be positive");
    }
    if (!(dwell_min > 0.0) || !(dwell_max >= dwell_min)) {
      throw Error(ErrorKind::Config, "dwell bounds must be positive");
    }
    double total = 0.0;
    for (double p : mode_mix) {
      if (!(p >= 0.0)) throw Error(ErrorKind::Config, "mode mix entries must be >= 0");
      total += p;
    }
    if (!counts && !(total > 0.0)) throw Error(ErrorKind::Config, "mode mix sums to zero");
  }
};

/// Splits `total` by `weights` with largest-remainder rounding; remainder
/// ties go to the lower class index.
inline std::array<std::size_t, kNumModes> largest_remainder(std::size_t total,
                                                           const std::array<double, kNumModes>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw Error(ErrorKind::InvalidArgument, "weights sum to zero");
  std::array<std::size_t, kNumModes> counts{};
  std::array<double, kNumModes> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < kNumModes; ++k) {
    const double exact = static_cast<double>(total) * weights[k] / sum;
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    rem[k] = exact - std::floor(exact);
    assigned += counts[k];
  }
  std::array<std::size_t, kNumModes> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[order[i % kNumModes]];
  return counts;
}

inline std::array<std::size_t, kNumModes> SyntheticSpec::mode_counts() const {
  if (counts) return *counts;
  return largest_remainder(total_trips, mode_mix);
}

/// Study-area geometry shared by the network and trajectory generators.
struct SyntheticArea {
  LatLon center{38.9, -77.03};
  double half_lat = 0.2;  // degrees
  double half_lon = 0.25;
  std::size_t rail_lines = 6;
  std::size_t bus_lines = 40;
  std::size_t highway_radials = 6;
  std::uint64_t seed = 7;
};

struct SyntheticNetworks {
  std::vector<std::vector<LatLon>> rail;
  std::vector<std::vector<LatLon>> bus;
  std::vector<std::vector<LatLon>> highway;

  NetworkSet build(double cell_size = ModalNetwork::kDefaultCellSize) const {
    auto segs = [](const std::vector<std::vector<LatLon>>& lines) {
      std::vector<GeoSegment> out;
      for (const auto& l : lines) append_polyline(l, out);
      return out;
    };
    return {ModalNetwork(NetworkKind::Rail, segs(rail), cell_size),
            ModalNetwork(NetworkKind::Bus, segs(bus), cell_size),
            ModalNetwork(NetworkKind::Highway, segs(highway), cell_size)};
  }
};

namespace detail {

/// Wandering line between two points, vertices roughly every `step` degrees.
inline std::vector<LatLon> wander_line(LatLon a, LatLon b, double step, double wobble, Rng& rng) {
  const double len = std::hypot(b.lat - a.lat, b.lon - a.lon);
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(len / step)) + 1);
  const double nx = -(b.lat - a.lat) / len;  // unit normal in (lon, lat)
  const double ny = (b.lon - a.lon) / len;
  std::vector<LatLon> pts;
  double offset = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    if (i > 0 && i + 1 < n) offset = 0.8 * offset + rng.normal(0.0, wobble);
    const double taper = std::sin(std::numbers::pi * t);
    pts.push_back({a.lat + t * (b.lat - a.lat) + ny * offset * taper,
                   a.lon + t * (b.lon - a.lon) + nx * offset * taper});
  }
  return pts;
}

inline LatLon boundary_point(const SyntheticArea& area, double angle) {
  return {area.center.lat + area.half_lat * std::sin(angle),
          area.center.lon + area.half_lon * std::cos(angle)};
}

}  // namespace detail

/// Rail lines cross near the centre, highways form two rings plus radials,
/// bus lines criss-cross the whole area.
inline SyntheticNetworks generate_networks(const SyntheticArea& area) {
  Rng rng(area.seed);
  SyntheticNetworks net;
  for (std::size_t i = 0; i < area.rail_lines; ++i) {
    const double angle = std::numbers::pi * (static_cast<double>(i) + rng.uniform(0.1, 0.9)) /
                         static_cast<double>(area.rail_lines);
    const LatLon via{area.center.lat + rng.uniform(-0.03, 0.03), area.center.lon + rng.uniform(-0.03, 0.03)};
    const LatLon a = detail::boundary_point(area, angle);
    const LatLon b = detail::boundary_point(area, angle + std::numbers::pi);
    auto first = detail::wander_line(a, via, 0.01, 0.002, rng);
    auto second = detail::wander_line(via, b, 0.01, 0.002, rng);
    first.insert(first.end(), second.begin() + 1, second.end());
    net.rail.push_back(std::move(first));
  }
  for (double radius : {0.35, 0.75}) {
    std::vector<LatLon> ring;
    const std::size_t n = 72;
    for (std::size_t i = 0; i <= n; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i % n) / static_cast<double>(n);
      ring.push_back({area.center.lat + radius * area.half_lat * std::sin(a),
                      area.center.lon + radius * area.half_lon * std::cos(a)});
    }
    net.highway.push_back(std::move(ring));
  }
  for (std::size_t i = 0; i < area.highway_radials; ++i) {
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(i) + rng.uniform(0.2, 0.8)) /
                         static_cast<double>(area.highway_radials);
    const LatLon inner{area.center.lat + 0.3 * area.half_lat * std::sin(angle),
                       area.center.lon + 0.3 * area.half_lon * std::cos(angle)};
    net.highway.push_back(detail::wander_line(inner, detail::boundary_point(area, angle), 0.01, 0.003, rng));
  }
  for (std::size_t i = 0; i < area.bus_lines; ++i) {
    const double a1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double a2 = a1 + rng.uniform(0.6 * std::numbers::pi, 1.4 * std::numbers::pi);
    const double s1 = rng.uniform(0.4, 1.0);
    const double s2 = rng.uniform(0.4, 1.0);
    const LatLon a{area.center.lat + s1 * area.half_lat * std::sin(a1),
                   area.center.lon + s1 * area.half_lon * std::cos(a1)};
    const LatLon b{area.center.lat + s2 * area.half_lat * std::sin(a2),
                   area.center.lon + s2 * area.half_lon * std::cos(a2)};
    net.bus.push_back(detail::wander_line(a, b, 0.005, 0.0015, rng));
  }
  return net;
}

struct SyntheticCorpus {
  std::vector<LocationPoint> points;  // device-major, time-ordered
  std::vector<GroundTruthTrip> trips;
};

namespace detail {

/// Polyline in a local metric frame with cumulative arc length.
class Path {
 public:
  Path(std::vector<LatLon> vertices) : v_(std::move(vertices)) {
    cum_.push_back(0.0);
    for (std::size_t i = 1; i < v_.size(); ++i) cum_.push_back(cum_.back() + haversine_distance(v_[i - 1], v_[i]));
  }

  double length() const { return cum_.back(); }
  const std::vector<LatLon>& vertices() const { return v_; }

  LatLon at(double s) const {
    s = std::clamp(s, 0.0, length());
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    if (i >= v_.size()) return v_.back();
    if (i == 0) return v_.front();
    const double seg = cum_[i] - cum_[i - 1];
    const double t = seg > 0.0 ? (s - cum_[i - 1]) / seg : 0.0;
    return {v_[i - 1].lat + t * (v_[i].lat - v_[i - 1].lat), v_[i - 1].lon + t * (v_[i].lon - v_[i - 1].lon)};
  }

  /// Sub-path between arc positions a < b (reversed if a > b).
  Path slice(double a, double b) const {
    const bool rev = a > b;
    if (rev) std::swap(a, b);
    std::vector<LatLon> out{at(a)};
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (cum_[i] > a && cum_[i] < b) out.push_back(v_[i]);
    }
    out.push_back(at(b));
    if (rev) std::reverse(out.begin(), out.end());
    return Path(std::move(out));
  }

 private:
  std::vector<LatLon> v_;
  std::vector<double> cum_;
};

inline LatLon offset_meters(const LatLon& p, double north, double east) {
  const double dlat = north / (kEarthRadius * kDegToRad);
  const double dlon = east / (kEarthRadius * kDegToRad * std::cos(p.lat * kDegToRad));
  return {p.lat + dlat, p.lon + dlon};
}

inline Path walk_path(const LatLon& start, double length, Rng& rng) {
  std::vector<LatLon> v{start};
  double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double done = 0.0;
  while (done < length) {
    const double step = std::min(200.0, length - done);
    v.push_back(offset_meters(v.back(), step * std::cos(heading), step * std::sin(heading)));
    heading += rng.normal(0.0, 0.5);
    done += step;
  }
  return Path(std::move(v));
}

/// Picks a stretch of a random line of `lines` with the requested length.
inline Path route_on(const std::vector<std::vector<LatLon>>& lines, double length, Rng& rng) {
  const Path line(lines[static_cast<std::size_t>(rng.below(lines.size()))]);
  const double total = line.length();
  const double len = std::min(length, 0.9 * total);
  const double start = rng.uniform(0.0, total - len);
  return rng.uniform() < 0.5 ? line.slice(start, start + len) : line.slice(start + len, start);
}

/// True speed (m/s) at each whole second of a trip over `path`.
inline std::vector<double> speed_trace(const SpeedProfile& prof, Mode mode, double length,
                                       double congestion_probability, Rng& rng) {
  std::vector<double> speeds;
  double cruise = rng.uniform(prof.cruise_min, prof.cruise_max);
  double s = 0.0;
  double next_stop = prof.stop_spacing_max > 0.0 ? rng.uniform(prof.stop_spacing_min, prof.stop_spacing_max)
                                                 : length + 1.0;
  double jam_start = length + 1.0, jam_end = length + 1.0, jam_speed = 0.0;
  if (mode == Mode::Car && rng.uniform() < congestion_probability) {
    jam_start = rng.uniform(0.0, 0.6 * length);
    jam_end = jam_start + rng.uniform(0.15, 0.4) * length;
    jam_speed = rng.uniform(2.0, 5.0);
  }
  while (s < length) {
    if (s >= next_stop) {
      const auto dwell = static_cast<std::size_t>(rng.uniform(prof.stop_min, prof.stop_max));
      for (std::size_t i = 0; i < dwell; ++i) speeds.push_back(0.0);
      next_stop = s + rng.uniform(prof.stop_spacing_min, prof.stop_spacing_max);
      cruise = std::clamp(cruise + rng.normal(0.0, 0.1 * cruise), prof.cruise_min, prof.cruise_max);
    }
    double v = (s >= jam_start && s < jam_end) ? jam_speed : cruise;
    v = std::max(0.3, v * (1.0 + rng.normal(0.0, 0.05)));
    speeds.push_back(v);
    s += v;
  }
  return speeds;
}

}  // namespace detail

/// Generates device traces: each device dwells, travels, dwells (and, with
/// two trips per device, returns along the same route). Route-bound modes
/// follow their network: bus on bus lines, metro on rail, car on highways.
inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, const SyntheticNetworks& networks,
                                          const SyntheticArea& area = {}) {
  spec.validate();
  const auto counts = spec.mode_counts();
  const bool cars = counts[index_of(Mode::Car)] > 0, buses = counts[index_of(Mode::Bus)] > 0;
  if ((cars && networks.highway.empty()) || (cars && spec.car_on_bus_roads > 0.0 && networks.bus.empty()) ||
      (counts[index_of(Mode::Metro)] && networks.rail.empty()) || (buses && networks.bus.empty()) ||
      (buses && spec.bus_on_highway > 0.0 && networks.highway.empty())) {
    throw Error(ErrorKind::Config, "synthetic spec needs a network that is missing");
  }

  // device plan: consecutive same-mode trips share a device
  std::vector<std::pair<Mode, std::size_t>> devices;
  for (std::size_t k = 0; k < kNumModes; ++k) {
    std::size_t left = counts[k];
    while (left > 0) {
      const std::size_t n = std::min(left, spec.trips_per_device);
      devices.emplace_back(mode_at(k), n);
      left -= n;
    }
  }
  Rng order_rng(derive_seed(spec.seed, 3));
  order_rng.shuffle(devices);

  SyntheticCorpus corpus;
  std::size_t trip_counter = 0;
  for (std::size_t d = 0; d < devices.size(); ++d) {
    const auto [mode, n_trips] = devices[d];
    Rng rng(derive_seed(spec.seed, 10'000 + d));
    char name[32];
    std::snprintf(name, sizeof(name), "dev%05zu", d);
    const std::string device = name;
    const auto& prof = spec.profiles[index_of(mode)];

    const double length = rng.uniform(prof.length_min, prof.length_max);
    detail::Path route = [&] {
      switch (mode) {
        case Mode::Car:
          return detail::route_on(rng.uniform() < spec.car_on_bus_roads ? networks.bus : networks.highway, length,
                                  rng);
        case Mode::Metro: return detail::route_on(networks.rail, length, rng);
        case Mode::Bus:
          return detail::route_on(rng.uniform() < spec.bus_on_highway ? networks.highway : networks.bus, length,
                                  rng);
        case Mode::Walk: break;
      }
      const LatLon start{area.center.lat + rng.uniform(-0.7, 0.7) * area.half_lat,
                         area.center.lon + rng.uniform(-0.7, 0.7) * area.half_lon};
      return detail::walk_path(start, length, rng);
    }();
    const double lateral_n = rng.normal(0.0, spec.lateral_sigma);
    const double lateral_e = rng.normal(0.0, spec.lateral_sigma);

    double t = spec.start_epoch + rng.uniform(0.0, 6.0 * 3600.0);
    auto emit = [&](const LatLon& truth, double when, double speed, bool moving) {
      LocationPoint p;
      p.device_id = device;
      p.timestamp = std::round(when);
      double noise = spec.gps_sigma;
      double accuracy = rng.uniform(3.0, 20.0);
      if (moving && rng.uniform() < spec.low_accuracy_rate) {
        accuracy = rng.uniform(150.0, 500.0);
        noise = accuracy;
      }
      LatLon pos = detail::offset_meters(truth, rng.normal(0.0, noise), rng.normal(0.0, noise));
      if (moving && rng.uniform() < spec.jump_rate) {
        pos = detail::offset_meters(truth, rng.uniform(-20000.0, 20000.0), rng.uniform(-20000.0, 20000.0));
      }
      p.latitude = pos.lat;
      p.longitude = pos.lon;
      if (spec.emit_accuracy) p.accuracy = std::round(accuracy * 10.0) / 10.0;
      if (spec.emit_speed) p.speed = std::max(0.0, std::round((speed + rng.normal(0.0, 0.3)) * 100.0) / 100.0);
      if (!moving && spec.emit_speed) p.speed = std::round(std::abs(rng.normal(0.0, 0.1)) * 100.0) / 100.0;
      p.latitude = std::round(p.latitude * 1e7) / 1e7;
      p.longitude = std::round(p.longitude * 1e7) / 1e7;
      corpus.points.push_back(p);
    };
    auto dwell = [&](const LatLon& where, double until) {
      while (true) {
        t += rng.uniform(spec.static_interval_min, spec.static_interval_max);
        if (t >= until) break;
        emit(where, t, 0.0, false);
      }
      t = until;
    };

    emit(route.at(0.0), t, 0.0, false);
    dwell(route.at(0.0), t + rng.uniform(spec.dwell_min, spec.dwell_max));
    for (std::size_t k = 0; k < n_trips; ++k) {
      const detail::Path path = k % 2 == 0 ? route : route.slice(route.length(), 0.0);
      const auto speeds = detail::speed_trace(prof, mode, path.length(), spec.car_congestion_probability, rng);
      const double start = std::round(t);
      t = start;

      // fix times while moving, then metro signal loss as one contiguous gap
      std::vector<double> fix_s;
      std::vector<std::size_t> fix_sec;
      double s = 0.0;
      double next_fix = 0.0;
      for (std::size_t sec = 0; sec < speeds.size(); ++sec) {
        if (static_cast<double>(sec) >= next_fix) {
          fix_s.push_back(s);
          fix_sec.push_back(sec);
          next_fix += spec.moving_interval;
        }
        s += speeds[sec];
      }
      const double duration = static_cast<double>(speeds.size());
      std::vector<bool> keep(fix_s.size(), true);
      if (mode == Mode::Metro && spec.metro_dropout > 0.0 && !fix_s.empty()) {
        const auto lost = std::min(fix_s.size(), static_cast<std::size_t>(std::ceil(
                                                     spec.metro_dropout * static_cast<double>(fix_s.size() + 1))));
        const auto first = static_cast<std::size_t>(rng.below(fix_s.size() - lost + 1));
        for (std::size_t i = first; i < first + lost; ++i) keep[i] = false;
      }
      GroundTruthTrip gt;
      gt.trip_id = "gt" + std::to_string(trip_counter++);
      gt.device_id = device;
      gt.mode = mode;
      gt.start_time = start;
      gt.end_time = start + duration;
      for (std::size_t i = 0; i < fix_s.size(); ++i) {
        if (!keep[i]) continue;
        const LatLon truth = detail::offset_meters(path.at(fix_s[i]), lateral_n, lateral_e);
        emit(truth, start + static_cast<double>(fix_sec[i]), speeds[fix_sec[i]], true);
        ++gt.n_points;
      }
      const LatLon dest = path.at(path.length());
      t = gt.end_time;
      emit(dest, t, 0.0, false);
      ++gt.n_points;
      corpus.trips.push_back(gt);
      dwell(dest, t + rng.uniform(spec.dwell_min, spec.dwell_max));
    }
  }
  return corpus;
}

}  // namespace modeforge
