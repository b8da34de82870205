#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "modeforge/csv.hpp"
#include "modeforge/error.hpp"
#include "modeforge/geo.hpp"

namespace modeforge {

enum class NetworkKind { Rail, Bus, Highway };

inline const char* to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::Rail: return "rail";
    case NetworkKind::Bus: return "bus";
    case NetworkKind::Highway: return "highway";
  }
  return "?";
}

struct NearestSegment {
  double distance = std::numeric_limits<double>::infinity();
  std::size_t segment = std::numeric_limits<std::size_t>::max();

  /// Orders by distance, ties by lower segment index.
  bool better_than(const NearestSegment& o) const {
    return distance < o.distance || (distance == o.distance && segment < o.segment);
  }
};

/// Polyline geometry of one modal network behind a uniform lat/lon grid.
/// Each segment is registered in every cell its bounding box overlaps.
class ModalNetwork {
 public:
  static constexpr double kDefaultCellSize = 0.01;  // degrees

  ModalNetwork() = default;

  ModalNetwork(NetworkKind kind, std::vector<GeoSegment> segments,
               double cell_size = kDefaultCellSize)
      : kind_(kind), cell_size_(cell_size), segments_(std::move(segments)) {
    if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) {
      throw Error(ErrorKind::Config, "grid cell size must be positive");
    }
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      require_coordinate(segments_[i].start);
      require_coordinate(segments_[i].end);
    }
    build_index();
  }

  NetworkKind kind() const { return kind_; }
  double cell_size() const { return cell_size_; }
  const std::vector<GeoSegment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  std::size_t cell_count() const { return cells_.size(); }

  /// Expanding-ring grid search; returns the same segment and distance a
  /// linear scan over segments() would, ties broken by lowest index.
  NearestSegment nearest(const LatLon& p) const {
    if (segments_.empty()) {
      throw Error(ErrorKind::EmptyNetwork,
                  std::string("nearest-line query on empty ") + to_string(kind_) + " network");
    }
    require_coordinate(p);
    const std::int64_t cx = cell_of(p.lon);
    const std::int64_t cy = cell_of(p.lat);
    // metres per degree in the local planar frame around p
    const double ky = kEarthRadius * kDegToRad;
    const double kx = ky * std::cos(p.lat * kDegToRad);

    Scratch& sc = scratch();
    if (sc.seen.size() < segments_.size() || ++sc.stamp == 0) {
      sc.seen.assign(std::max(sc.seen.size(), segments_.size()), 0);
      sc.stamp = 1;
    }
    auto& seen = sc.seen;
    const std::uint32_t stamp = sc.stamp;
    NearestSegment best;
    const std::int64_t max_ring =
        std::max({cx - min_x_, max_x_ - cx, cy - min_y_, max_y_ - cy, std::int64_t{0}});
    // rings closer than the occupied extent hold no cells
    const std::int64_t first_ring =
        std::max({min_x_ - cx, cx - max_x_, min_y_ - cy, cy - max_y_, std::int64_t{0}});
    for (std::int64_t r = first_ring; r <= max_ring; ++r) {
      visit_ring(cx, cy, r, [&](std::uint32_t s) {
        if (seen[s] == stamp) return;
        seen[s] = stamp;
        NearestSegment cand{segment_point_distance(p, segments_[s]), s};
        if (cand.better_than(best)) best = cand;
      });
      // Any unseen segment lies wholly outside the scanned square of cells.
      const double gap_lat = std::min(p.lat - static_cast<double>(cy - r) * cell_size_,
                                      static_cast<double>(cy + r + 1) * cell_size_ - p.lat);
      const double gap_lon = std::min(p.lon - static_cast<double>(cx - r) * cell_size_,
                                      static_cast<double>(cx + r + 1) * cell_size_ - p.lon);
      // Half the planar gap: headroom for the planar/great-circle mismatch.
      const double bound = 0.5 * std::min(gap_lat * ky, gap_lon * kx);
      if (best.distance < bound) break;
    }
    return best;
  }

  double nearest_distance(const LatLon& p) const { return nearest(p).distance; }

 private:
  struct Scratch {
    std::vector<std::uint32_t> seen;
    std::uint32_t stamp = 0;
  };

  static Scratch& scratch() {
    thread_local Scratch s;
    return s;
  }

  std::int64_t cell_of(double deg) const {
    return static_cast<std::int64_t>(std::floor(deg / cell_size_));
  }

  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ (static_cast<std::uint64_t>(y) & 0xffffffffULL);
  }

  void build_index() {
    cells_.clear();
    if (segments_.empty()) return;
    min_x_ = min_y_ = std::numeric_limits<std::int64_t>::max();
    max_x_ = max_y_ = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      const std::int64_t x0 = cell_of(std::min(s.start.lon, s.end.lon));
      const std::int64_t x1 = cell_of(std::max(s.start.lon, s.end.lon));
      const std::int64_t y0 = cell_of(std::min(s.start.lat, s.end.lat));
      const std::int64_t y1 = cell_of(std::max(s.start.lat, s.end.lat));
      min_x_ = std::min(min_x_, x0);
      max_x_ = std::max(max_x_, x1);
      min_y_ = std::min(min_y_, y0);
      max_y_ = std::max(max_y_, y1);
      for (std::int64_t x = x0; x <= x1; ++x) {
        for (std::int64_t y = y0; y <= y1; ++y) {
          cells_[key(x, y)].push_back(static_cast<std::uint32_t>(i));
        }
      }
    }
  }

  template <typename F>
  void visit_cell(std::int64_t x, std::int64_t y, F&& f) const {
    if (x < min_x_ || x > max_x_ || y < min_y_ || y > max_y_) return;
    auto it = cells_.find(key(x, y));
    if (it == cells_.end()) return;
    for (std::uint32_t s : it->second) f(s);
  }

  template <typename F>
  void visit_ring(std::int64_t cx, std::int64_t cy, std::int64_t r, F&& f) const {
    if (r == 0) {
      visit_cell(cx, cy, f);
      return;
    }
    // clipped to the occupied extent; far queries would otherwise walk empty cells
    const std::int64_t x_lo = std::max(cx - r, min_x_), x_hi = std::min(cx + r, max_x_);
    const std::int64_t y_lo = std::max(cy - r + 1, min_y_), y_hi = std::min(cy + r - 1, max_y_);
    for (std::int64_t x = x_lo; x <= x_hi; ++x) {
      visit_cell(x, cy - r, f);
      visit_cell(x, cy + r, f);
    }
    for (std::int64_t y = y_lo; y <= y_hi; ++y) {
      visit_cell(cx - r, y, f);
      visit_cell(cx + r, y, f);
    }
  }

  NetworkKind kind_ = NetworkKind::Rail;
  double cell_size_ = kDefaultCellSize;
  std::vector<GeoSegment> segments_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
  std::int64_t min_x_ = 0, max_x_ = -1, min_y_ = 0, max_y_ = -1;
};

/// Polyline -> consecutive-vertex segments.
inline void append_polyline(const std::vector<LatLon>& line, std::vector<GeoSegment>& out) {
  for (std::size_t i = 1; i < line.size(); ++i) out.push_back({line[i - 1], line[i]});
}

namespace detail {

inline std::vector<LatLon> parse_linestring(const nlohmann::json& coords, const std::string& where) {
  if (!coords.is_array()) throw Error(ErrorKind::Parse, where + ": coordinates must be an array");
  std::vector<LatLon> line;
  line.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      throw Error(ErrorKind::Parse, where + ": position must be [lon, lat]");
    }
    LatLon p{c[1].get<double>(), c[0].get<double>()};
    if (!valid_coordinate(p)) throw Error(ErrorKind::Parse, where + ": coordinate out of range");
    line.push_back(p);
  }
  if (line.size() < 2) throw Error(ErrorKind::Parse, where + ": LineString needs >= 2 positions");
  return line;
}

inline void parse_geometry(const nlohmann::json& g, const std::string& where,
                           std::vector<GeoSegment>& out) {
  if (g.is_null()) return;
  if (!g.is_object() || !g.contains("type") || !g["type"].is_string()) {
    throw Error(ErrorKind::Parse, where + ": geometry without a type");
  }
  const std::string type = g["type"].get<std::string>();
  if (type == "LineString") {
    if (!g.contains("coordinates")) throw Error(ErrorKind::Parse, where + ": missing coordinates");
    append_polyline(parse_linestring(g["coordinates"], where), out);
  } else if (type == "MultiLineString") {
    if (!g.contains("coordinates") || !g["coordinates"].is_array()) {
      throw Error(ErrorKind::Parse, where + ": missing coordinates");
    }
    for (const auto& part : g["coordinates"]) append_polyline(parse_linestring(part, where), out);
  } else if (type == "GeometryCollection") {
    if (!g.contains("geometries") || !g["geometries"].is_array()) {
      throw Error(ErrorKind::Parse, where + ": missing geometries");
    }
    for (const auto& sub : g["geometries"]) parse_geometry(sub, where, out);
  }
  // Point and polygon geometries carry no line network; they are ignored.
}

}  // namespace detail

/// Decomposes GeoJSON LineString/MultiLineString features into segments.
inline std::vector<GeoSegment> parse_geojson_segments(const std::string& text,
                                                      const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, source + ": " + e.what());
  }
  std::vector<GeoSegment> out;
  if (!doc.is_object() || !doc.contains("type")) {
    throw Error(ErrorKind::Parse, source + ": not a GeoJSON object");
  }
  const std::string type = doc["type"].is_string() ? doc["type"].get<std::string>() : "";
  if (type == "FeatureCollection") {
    if (!doc.contains("features") || !doc["features"].is_array()) {
      throw Error(ErrorKind::Parse, source + ": FeatureCollection without features");
    }
    const auto& features = doc["features"];
    for (std::size_t i = 0; i < features.size(); ++i) {
      const std::string where = source + ": feature " + std::to_string(i);
      if (!features[i].is_object() || !features[i].contains("geometry")) {
        throw Error(ErrorKind::Parse, where + ": missing geometry");
      }
      detail::parse_geometry(features[i]["geometry"], where, out);
    }
  } else if (type == "Feature") {
    detail::parse_geometry(doc.value("geometry", nlohmann::json()), source + ": feature 0", out);
  } else {
    detail::parse_geometry(doc, source + ": geometry", out);
  }
  return out;
}

/// GTFS shapes.txt: vertices grouped by shape_id (first-appearance order)
/// and sorted by shape_pt_sequence before segmentation.
inline std::vector<GeoSegment> parse_gtfs_shapes(const csv::Table& table) {
  const auto c_id = table.column("shape_id");
  const auto c_lat = table.column("shape_pt_lat");
  const auto c_lon = table.column("shape_pt_lon");
  const auto c_seq = table.column("shape_pt_sequence");

  struct Vertex {
    double seq;
    LatLon pos;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Vertex>> shapes;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const std::string id = csv::trim(table.at(r, c_id));
    LatLon pos{table.number(r, c_lat), table.number(r, c_lon)};
    if (!valid_coordinate(pos)) {
      throw Error(ErrorKind::Parse,
                  table.source() + ": record " + std::to_string(r) + ": coordinate out of range");
    }
    auto [it, inserted] = shapes.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back({table.number(r, c_seq), pos});
  }
  std::vector<GeoSegment> out;
  for (const auto& id : order) {
    auto& verts = shapes[id];
    std::stable_sort(verts.begin(), verts.end(),
                     [](const Vertex& a, const Vertex& b) { return a.seq < b.seq; });
    std::vector<LatLon> line;
    line.reserve(verts.size());
    for (const auto& v : verts) line.push_back(v.pos);
    append_polyline(line, out);
  }
  return out;
}

/// Loads a network file: *.geojson / *.json as GeoJSON, anything else (or a
/// GTFS feed directory) as shapes.txt.
inline ModalNetwork load_network(NetworkKind kind, const std::filesystem::path& path,
                                 double cell_size = ModalNetwork::kDefaultCellSize) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(file)) file /= "shapes.txt";
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open network file '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string ext = file.extension().string();
  std::vector<GeoSegment> segments;
  if (ext == ".geojson" || ext == ".json") {
    segments = parse_geojson_segments(ss.str(), file.string());
  } else {
    segments = parse_gtfs_shapes(csv::Table::parse(ss.str(), file.string()));
  }
  return ModalNetwork(kind, std::move(segments), cell_size);
}

struct NetworkSet {
  ModalNetwork rail;
  ModalNetwork bus;
  ModalNetwork highway;
};

inline NetworkSet load_networks(const std::filesystem::path& rail_path,
                                const std::filesystem::path& bus_path,
                                const std::filesystem::path& highway_path,
                                double cell_size = ModalNetwork::kDefaultCellSize) {
  return {load_network(NetworkKind::Rail, rail_path, cell_size),
          load_network(NetworkKind::Bus, bus_path, cell_size),
          load_network(NetworkKind::Highway, highway_path, cell_size)};
}

/// One LineString feature per polyline.
inline std::string to_geojson(const std::vector<std::vector<LatLon>>& polylines) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < polylines.size(); ++i) {
    nlohmann::json coords = nlohmann::json::array();
    for (const auto& p : polylines[i]) coords.push_back({p.lon, p.lat});
    features.push_back({{"type", "Feature"},
                        {"properties", {{"id", i}}},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}});
  }
  nlohmann::json doc = {{"type", "FeatureCollection"}, {"features", features}};
  return doc.dump() + "\n";
}

inline std::string to_gtfs_shapes(const std::vector<std::vector<LatLon>>& polylines) {
  csv::Writer w({"shape_id", "shape_pt_lat", "shape_pt_lon", "shape_pt_sequence"});
  for (std::size_t i = 0; i < polylines.size(); ++i) {
    for (std::size_t j = 0; j < polylines[i].size(); ++j) {
      w.row({"shape_" + std::to_string(i), csv::format_fixed(polylines[i][j].lat, 7),
             csv::format_fixed(polylines[i][j].lon, 7), std::to_string(j + 1)});
    }
  }
  return w.str();
}

}  // namespace modeforge
