#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modeforge/corpus.hpp"
#include "modeforge/csv.hpp"
#include "modeforge/error.hpp"
#include "modeforge/features.hpp"
#include "modeforge/geo.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/trip_extraction.hpp"

namespace modeforge::io {

namespace detail {

inline bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
  if (pos + digits > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += digits;
  out = v;
  return true;
}

inline bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace detail

/// RFC 3339 date-time (`2017-07-10T08:30:00Z`, `...T08:30:00.5-04:00`) to
/// UTC epoch seconds. A space is accepted in place of `T`.
inline std::optional<double> parse_rfc3339(std::string_view s) {
  using detail::expect;
  using detail::read_int;
  std::size_t p = 0;
  int y, mo, d, h, mi, sec;
  if (!read_int(s, p, 4, y) || !expect(s, p, '-') || !read_int(s, p, 2, mo) || !expect(s, p, '-') ||
      !read_int(s, p, 2, d)) {
    return std::nullopt;
  }
  if (!(expect(s, p, 'T') || expect(s, p, 't') || expect(s, p, ' '))) return std::nullopt;
  if (!read_int(s, p, 2, h) || !expect(s, p, ':') || !read_int(s, p, 2, mi) || !expect(s, p, ':') ||
      !read_int(s, p, 2, sec)) {
    return std::nullopt;
  }
  double frac = 0.0;
  if (expect(s, p, '.')) {
    double scale = 0.1;
    const std::size_t start = p;
    while (p < s.size() && s[p] >= '0' && s[p] <= '9') {
      frac += scale * (s[p] - '0');
      scale /= 10.0;
      ++p;
    }
    if (p == start) return std::nullopt;
  }
  int offset = 0;
  if (expect(s, p, 'Z') || expect(s, p, 'z')) {
  } else if (p < s.size() && (s[p] == '+' || s[p] == '-')) {
    const int sign = s[p] == '-' ? -1 : 1;
    ++p;
    int oh, om;
    if (!read_int(s, p, 2, oh) || !expect(s, p, ':') || !read_int(s, p, 2, om)) return std::nullopt;
    offset = sign * (oh * 3600 + om * 60);
  } else {
    return std::nullopt;
  }
  if (p != s.size()) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec + frac - offset;
}

enum class TimestampFormat { Epoch, Rfc3339 };

// ---------------------------------------------------------------- points

/// `device_id,timestamp,latitude,longitude[,accuracy][,speed]`. The
/// timestamp format is detected from the first record and must hold for
/// the whole file.
inline std::vector<LocationPoint> read_points(const csv::Table& t) {
  const auto c_dev = t.column("device_id");
  const auto c_ts = t.column("timestamp");
  const auto c_lat = t.column("latitude");
  const auto c_lon = t.column("longitude");
  const auto c_acc = t.find_column("accuracy");
  const auto c_spd = t.find_column("speed");

  std::optional<TimestampFormat> fmt;
  std::vector<LocationPoint> out;
  out.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    auto fail = [&](const std::string& what) {
      return Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) + ": " + what);
    };
    const std::string ts = csv::trim(t.at(r, c_ts));
    if (!fmt) fmt = csv::to_double(ts) ? TimestampFormat::Epoch : TimestampFormat::Rfc3339;
    const auto when = *fmt == TimestampFormat::Epoch ? csv::to_double(ts) : parse_rfc3339(ts);
    if (!when) {
      throw fail("timestamp '" + ts + "' is not " +
                 (*fmt == TimestampFormat::Epoch ? "epoch seconds" : "RFC 3339") + " like the first record");
    }
    LocationPoint p;
    p.device_id = csv::trim(t.at(r, c_dev));
    if (p.device_id.empty()) throw fail("empty device_id");
    p.timestamp = *when;
    p.latitude = t.number(r, c_lat);
    p.longitude = t.number(r, c_lon);
    if (c_acc) p.accuracy = t.optional_number(r, *c_acc);
    if (c_spd) p.speed = t.optional_number(r, *c_spd);
    try {
      validate_point(p);
    } catch (const Error& e) {
      throw Error(e.kind(), t.source() + ": record " + std::to_string(r) + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<LocationPoint> read_points(const std::filesystem::path& path) {
  return read_points(csv::Table::read(path));
}

inline std::string optional_field(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

inline void add_point_fields(std::vector<std::string>& row, const LocationPoint& p) {
  row.push_back(csv::format_double(p.timestamp));
  row.push_back(csv::format_double(p.latitude));
  row.push_back(csv::format_double(p.longitude));
  row.push_back(optional_field(p.accuracy));
  row.push_back(optional_field(p.speed));
}

inline csv::Writer points_csv(const std::vector<LocationPoint>& points) {
  csv::Writer w({"device_id", "timestamp", "latitude", "longitude", "accuracy", "speed"});
  for (const auto& p : points) {
    std::vector<std::string> row{p.device_id};
    add_point_fields(row, p);
    w.row(row);
  }
  return w;
}

inline csv::Writer points_csv(const std::vector<PointSequence>& devices) {
  std::vector<LocationPoint> all;
  for (const auto& d : devices) all.insert(all.end(), d.points().begin(), d.points().end());
  return points_csv(all);
}

// ---------------------------------------------------------- ground truth

inline csv::Writer ground_truth_csv(const std::vector<GroundTruthTrip>& trips) {
  csv::Writer w({"trip_id", "device_id", "mode", "start_time", "end_time", "n_points"});
  for (const auto& g : trips) {
    w.row({g.trip_id, g.device_id, to_string(g.mode), csv::format_double(g.start_time),
           csv::format_double(g.end_time), std::to_string(g.n_points)});
  }
  return w;
}

inline std::vector<GroundTruthTrip> read_ground_truth(const csv::Table& t) {
  const auto c_id = t.column("trip_id");
  const auto c_dev = t.column("device_id");
  const auto c_mode = t.column("mode");
  const auto c_s = t.column("start_time");
  const auto c_e = t.column("end_time");
  const auto c_n = t.find_column("n_points");
  std::vector<GroundTruthTrip> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    GroundTruthTrip g;
    g.trip_id = csv::trim(t.at(r, c_id));
    g.device_id = csv::trim(t.at(r, c_dev));
    const auto m = parse_mode(csv::trim(t.at(r, c_mode)));
    if (!m) {
      throw Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) + ": unknown mode '" +
                                        t.at(r, c_mode) + "'");
    }
    g.mode = *m;
    g.start_time = t.number(r, c_s);
    g.end_time = t.number(r, c_e);
    if (!(g.end_time >= g.start_time)) {
      throw Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) + ": end_time < start_time");
    }
    if (c_n) g.n_points = static_cast<std::size_t>(t.number(r, *c_n));
    out.push_back(std::move(g));
  }
  return out;
}

inline std::vector<GroundTruthTrip> read_ground_truth(const std::filesystem::path& path) {
  return read_ground_truth(csv::Table::read(path));
}

// ----------------------------------------------------------------- trips

inline csv::Writer trips_csv(const std::vector<Trip>& trips) {
  csv::Writer w({"trip_id", "device_id", "start_time", "end_time", "n_points", "origin_lat", "origin_lon",
                 "dest_lat", "dest_lon"});
  for (const auto& t : trips) {
    w.row({t.trip_id, t.device_id, csv::format_double(t.start_time()), csv::format_double(t.end_time()),
           std::to_string(t.points.size()), csv::format_double(t.origin().lat), csv::format_double(t.origin().lon),
           csv::format_double(t.destination().lat), csv::format_double(t.destination().lon)});
  }
  return w;
}

/// point_index is the fix's position in the device's filtered sequence.
inline csv::Writer trip_points_csv(const std::vector<Trip>& trips) {
  csv::Writer w({"trip_id", "point_index", "device_id", "timestamp", "latitude", "longitude", "accuracy", "speed"});
  for (const auto& t : trips) {
    for (std::size_t k = 0; k < t.points.size(); ++k) {
      std::vector<std::string> row{t.trip_id, std::to_string(t.first_index + k), t.device_id};
      add_point_fields(row, t.points[k]);
      w.row(row);
    }
  }
  return w;
}

/// Rebuilds trips from a point-membership file, in order of first
/// appearance.
inline std::vector<Trip> read_trip_points(const csv::Table& t) {
  const auto c_id = t.column("trip_id");
  const auto c_idx = t.column("point_index");
  const auto c_dev = t.column("device_id");
  const auto c_ts = t.column("timestamp");
  const auto c_lat = t.column("latitude");
  const auto c_lon = t.column("longitude");
  const auto c_acc = t.column("accuracy");
  const auto c_spd = t.column("speed");
  std::vector<Trip> trips;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const std::string id = csv::trim(t.at(r, c_id));
    auto [it, fresh] = index.emplace(id, trips.size());
    if (fresh) {
      Trip trip;
      trip.trip_id = id;
      trip.device_id = csv::trim(t.at(r, c_dev));
      trip.first_index = static_cast<std::size_t>(t.number(r, c_idx));
      trips.push_back(std::move(trip));
    }
    Trip& trip = trips[it->second];
    LocationPoint p;
    p.device_id = csv::trim(t.at(r, c_dev));
    if (p.device_id != trip.device_id) {
      throw Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) + ": trip '" + id +
                                        "' spans several devices");
    }
    p.timestamp = t.number(r, c_ts);
    p.latitude = t.number(r, c_lat);
    p.longitude = t.number(r, c_lon);
    p.accuracy = t.optional_number(r, c_acc);
    p.speed = t.optional_number(r, c_spd);
    trip.points.push_back(std::move(p));
  }
  for (const auto& trip : trips) {
    if (trip.points.size() < 2) {
      throw Error(ErrorKind::Parse, t.source() + ": trip '" + trip.trip_id + "' has fewer than 2 points");
    }
  }
  return trips;
}

inline std::vector<Trip> read_trip_points(const std::filesystem::path& path) {
  return read_trip_points(csv::Table::read(path));
}

// -------------------------------------------------------------- features

inline csv::Writer features_csv(const std::vector<FeatureVector>& rows) {
  std::vector<std::string> header{"trip_id"};
  for (auto n : kFeatureNames) header.emplace_back(n);
  for (auto n : kFeatureNames) header.push_back(std::string("norm_") + n);
  header.emplace_back("label");
  csv::Writer w(header);
  for (const auto& fv : rows) {
    std::vector<std::string> row{fv.trip_id};
    for (double v : fv.raw) row.push_back(csv::format_double(v));
    for (double v : fv.normalized) row.push_back(csv::format_double(v));
    row.emplace_back(fv.label ? to_string(*fv.label) : "");
    w.row(row);
  }
  return w;
}

/// Reads raw features and labels; normalized columns are ignored.
inline std::vector<FeatureVector> read_features(const csv::Table& t) {
  const auto c_id = t.column("trip_id");
  std::array<std::size_t, kNumFeatures> cols{};
  for (std::size_t j = 0; j < kNumFeatures; ++j) cols[j] = t.column(kFeatureNames[j]);
  const auto c_label = t.find_column("label");
  std::vector<FeatureVector> out;
  out.reserve(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    FeatureVector fv;
    fv.trip_id = csv::trim(t.at(r, c_id));
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      fv.raw[j] = t.number(r, cols[j]);
      if (!std::isfinite(fv.raw[j])) {
        throw Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) + ": non-finite " +
                                          kFeatureNames[j]);
      }
    }
    if (c_label) {
      const std::string s = csv::trim(t.at(r, *c_label));
      if (!s.empty()) {
        fv.label = parse_mode(s);
        if (!fv.label) {
          throw Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) + ": unknown label '" + s + "'");
        }
      }
    }
    out.push_back(std::move(fv));
  }
  return out;
}

inline std::vector<FeatureVector> read_features(const std::filesystem::path& path) {
  return read_features(csv::Table::read(path));
}

// --------------------------------------------------------- imputed trips

struct ImputedTrip {
  std::string trip_id;
  Mode mode = Mode::Car;
  LabelSource source = LabelSource::Imputed;
  double trip_time = 0.0;
  double trip_length = 0.0;
  std::array<double, kNumModes> probability{};
};

inline csv::Writer imputed_csv(const std::vector<ImputedTrip>& rows) {
  csv::Writer w({"trip_id", "mode", "label_source", "trip_time", "trip_length", "p_car", "p_metro", "p_bus",
                 "p_walk"});
  for (const auto& r : rows) {
    std::vector<std::string> row{r.trip_id, to_string(r.mode), to_string(r.source), csv::format_double(r.trip_time),
                                 csv::format_double(r.trip_length)};
    for (double p : r.probability) row.push_back(csv::format_fixed(p, 6));
    w.row(row);
  }
  return w;
}

/// Any CSV with `trip_id,mode,trip_time,trip_length` columns.
inline std::vector<ImputedTrip> read_labeled_trips(const csv::Table& t) {
  const auto c_id = t.column("trip_id");
  const auto c_mode = t.column("mode");
  const auto c_time = t.column("trip_time");
  const auto c_len = t.column("trip_length");
  std::vector<ImputedTrip> out;
  for (std::size_t r = 0; r < t.size(); ++r) {
    ImputedTrip x;
    x.trip_id = csv::trim(t.at(r, c_id));
    const auto m = parse_mode(csv::trim(t.at(r, c_mode)));
    if (!m) {
      throw Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) + ": unknown mode '" +
                                        t.at(r, c_mode) + "'");
    }
    x.mode = *m;
    x.trip_time = t.number(r, c_time);
    x.trip_length = t.number(r, c_len);
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace modeforge::io
