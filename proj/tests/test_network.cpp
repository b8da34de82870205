#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "modeforge/network.hpp"
#include "modeforge/rng.hpp"
#include "support.hpp"

using namespace modeforge;

using testkit::linear_scan;
using testkit::random_segments;

TEST(ModalNetwork, PointOnSegmentIsZero) {
  ModalNetwork net(NetworkKind::Rail, {{{38.9, -77.0}, {38.9, -76.9}}});
  EXPECT_NEAR(net.nearest_distance({38.9, -76.95}), 0.0, 1e-6);
  EXPECT_EQ(net.nearest({38.9, -76.95}).segment, 0u);
}

TEST(ModalNetwork, EmptyNetworkThrows) {
  ModalNetwork net(NetworkKind::Bus, {});
  try {
    net.nearest({38.9, -77.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyNetwork);
  }
}

TEST(ModalNetwork, RejectsBadCellSize) {
  EXPECT_THROW(ModalNetwork(NetworkKind::Rail, {}, 0.0), Error);
  EXPECT_THROW(ModalNetwork(NetworkKind::Rail, {}, -1.0), Error);
}

TEST(ModalNetwork, GridMatchesLinearScanExactly) {
  Rng rng(2024);
  const auto segs = random_segments(rng, 10000, 0.3, 0.02);
  ModalNetwork net(NetworkKind::Highway, segs);
  for (int i = 0; i < 1000; ++i) {
    // include points well outside the network's extent
    const double reach = i % 10 == 0 ? 1.0 : 0.35;
    const LatLon p{38.9 + rng.uniform(-reach, reach), -77.0 + rng.uniform(-reach, reach)};
    const auto want = linear_scan(p, segs);
    const auto got = net.nearest(p);
    ASSERT_EQ(got.segment, want.segment) << i;
    ASSERT_EQ(got.distance, want.distance) << i;
  }
}

TEST(ModalNetwork, SparseAndLongSegmentsMatchLinearScan) {
  Rng rng(8);
  for (double cell : {0.005, 0.02, 0.1}) {
    const auto segs = random_segments(rng, 30, 0.5, 0.4);
    ModalNetwork net(NetworkKind::Rail, segs, cell);
    for (int i = 0; i < 300; ++i) {
      const LatLon p{38.9 + rng.uniform(-1.5, 1.5), -77.0 + rng.uniform(-1.5, 1.5)};
      const auto want = linear_scan(p, segs);
      const auto got = net.nearest(p);
      ASSERT_EQ(got.segment, want.segment);
      ASSERT_EQ(got.distance, want.distance);
    }
  }
}

TEST(ModalNetwork, TiesGoToLowestIndex) {
  const GeoSegment s{{38.9, -77.0}, {38.9, -76.99}};
  ModalNetwork net(NetworkKind::Bus, {s, s, s});
  EXPECT_EQ(net.nearest({38.91, -76.995}).segment, 0u);
}

TEST(ParseGeojson, ThreeVertexLineStringIsTwoSegments) {
  const std::string doc = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{},"geometry":{"type":"LineString",
     "coordinates":[[-77.0,38.9],[-77.01,38.91],[-77.02,38.92]]}}]})";
  const auto segs = parse_geojson_segments(doc, "t.geojson");
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].start.lat, 38.9);
  EXPECT_EQ(segs[0].start.lon, -77.0);
  EXPECT_EQ(segs[1].end.lat, 38.92);
}

TEST(ParseGeojson, MultiLineStringAndNullGeometry) {
  const std::string doc = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","geometry":null},
    {"type":"Feature","geometry":{"type":"MultiLineString",
     "coordinates":[[[0,0],[0,1]],[[1,1],[1,2],[1,3]]]}}]})";
  EXPECT_EQ(parse_geojson_segments(doc, "m.geojson").size(), 3u);
}

TEST(ParseGeojson, MalformedFeatureNamesFileAndIndex) {
  const std::string doc = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[0,1]]}},
    {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0]]}}]})";
  try {
    parse_geojson_segments(doc, "roads.geojson");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    const std::string what = e.what();
    EXPECT_NE(what.find("roads.geojson"), std::string::npos);
    EXPECT_NE(what.find("feature 1"), std::string::npos);
  }
  EXPECT_THROW(parse_geojson_segments("{not json", "x.geojson"), Error);
}

TEST(ParseGtfs, TwoShapesOfFourPointsGiveSixSegments) {
  const std::string text =
      "shape_id,shape_pt_lat,shape_pt_lon,shape_pt_sequence\n"
      "a,38.90,-77.00,1\na,38.91,-77.00,2\na,38.92,-77.00,3\na,38.93,-77.00,4\n"
      "b,38.90,-77.10,1\nb,38.91,-77.10,2\nb,38.92,-77.10,3\nb,38.93,-77.10,4\n";
  EXPECT_EQ(parse_gtfs_shapes(csv::Table::parse(text, "shapes.txt")).size(), 6u);
}

TEST(ParseGtfs, RowsAreSortedBySequence) {
  const std::string text =
      "shape_id,shape_pt_lat,shape_pt_lon,shape_pt_sequence\n"
      "a,38.93,-77.00,4\na,38.90,-77.00,1\na,38.92,-77.00,3\na,38.91,-77.00,2\n";
  const auto segs = parse_gtfs_shapes(csv::Table::parse(text, "shapes.txt"));
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].start.lat, 38.90);
  EXPECT_EQ(segs[0].end.lat, 38.91);
  EXPECT_EQ(segs[2].end.lat, 38.93);
}

TEST(LoadNetworks, RoundTripsThroughFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "modeforge_test_network";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "gtfs");
  const std::vector<std::vector<LatLon>> lines = {{{38.9, -77.0}, {38.95, -77.0}, {38.95, -76.95}},
                                                  {{38.8, -77.1}, {38.85, -77.1}}};
  std::ofstream(dir / "rail.geojson") << to_geojson(lines);
  std::ofstream(dir / "gtfs" / "shapes.txt") << to_gtfs_shapes(lines);
  std::ofstream(dir / "hw.json") << to_geojson(lines);
  const auto nets = load_networks(dir / "rail.geojson", dir / "gtfs", dir / "hw.json");
  EXPECT_EQ(nets.rail.segments().size(), 3u);
  EXPECT_EQ(nets.bus.segments().size(), 3u);
  EXPECT_EQ(nets.bus.kind(), NetworkKind::Bus);
  const LatLon q{38.92, -76.99};
  EXPECT_NEAR(nets.rail.nearest_distance(q), nets.bus.nearest_distance(q), 0.05);
  EXPECT_THROW(load_network(NetworkKind::Rail, dir / "missing.geojson"), Error);
  std::filesystem::remove_all(dir);
}
