#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "modeforge/rng.hpp"
#include "modeforge/trip_extraction.hpp"
#include "support.hpp"

using namespace modeforge;

namespace {

constexpr double kMetersPerDegLat = kEarthRadius * kDegToRad;

LocationPoint fix(double lat, double lon, double t, std::optional<double> speed = std::nullopt,
                  std::optional<double> accuracy = std::nullopt) {
  LocationPoint p;
  p.device_id = "dev";
  p.latitude = lat;
  p.longitude = lon;
  p.timestamp = t;
  p.speed = speed;
  p.accuracy = accuracy;
  return p;
}

// Points moving north at `speed` m/s, one every `dt` seconds.
std::vector<LocationPoint> line(double lat0, double t0, std::size_t n, double speed, double dt,
                                std::optional<double> recorded = std::nullopt) {
  std::vector<LocationPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(fix(lat0 + speed * dt * static_cast<double>(i) / kMetersPerDegLat, -77.0,
                      t0 + dt * static_cast<double>(i), recorded));
  }
  return pts;
}

std::vector<LocationPoint> dwell(double lat, double t0, std::size_t n, double dt) {
  std::vector<LocationPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(fix(lat, -77.0, t0 + dt * static_cast<double>(i), 0.0));
  return pts;
}

}  // namespace

using testkit::oracle_regions;
using testkit::random_sequence;

TEST(FilterPoints, DropsImpliedJump) {
  // second fix is 20 km away after 100 s: 200 m/s
  PointSequence s("dev", {fix(38.9, -77.0, 0), fix(38.9 + 20000.0 / kMetersPerDegLat, -77.0, 100),
                          fix(38.9 + 100.0 / kMetersPerDegLat, -77.0, 200)});
  const auto out = filter_points(s, {});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].timestamp, 200);
}

TEST(FilterPoints, JumpIsJudgedAgainstLastRetainedFix) {
  // after dropping the outlier, the next fix is compared to fix 0, not to the outlier
  PointSequence s("dev", {fix(38.9, -77.0, 0), fix(39.5, -77.0, 10), fix(38.9, -77.0, 20)});
  EXPECT_EQ(filter_points(s, {}).size(), 2u);
}

TEST(FilterPoints, EmptyStaysEmpty) {
  EXPECT_TRUE(filter_points(PointSequence("dev", {}), {}).empty());
}

TEST(FilterPoints, StationaryAccurateSequenceUnchanged) {
  std::vector<LocationPoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(fix(38.9, -77.0, i * 30.0, 0.0, 5.0));
  FilterConfig cfg;
  cfg.min_accuracy = 50.0;
  const auto out = filter_points(PointSequence("dev", pts), cfg);
  ASSERT_EQ(out.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(out[i].timestamp, pts[i].timestamp);
}

TEST(FilterPoints, AccuracyThresholdIsInclusive) {
  FilterConfig cfg;
  cfg.min_accuracy = 50.0;
  const auto out = filter_points(
      PointSequence("dev", {fix(38.9, -77.0, 0, 0.0, 50.0), fix(38.9, -77.0, 10, 0.0, 50.5), fix(38.9, -77.0, 20)}),
      cfg);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].timestamp, 20);  // missing accuracy is kept
}

TEST(StayRegions, TwentyPointDwellIsOneRegion) {
  Rng rng(3);
  std::vector<LocationPoint> pts;
  for (int i = 0; i < 20; ++i) {
    pts.push_back(fix(38.9 + rng.uniform(-3, 3) / kMetersPerDegLat, -77.0, i * 60.0 + 60.0, 0.0));
  }
  StayRegionConfig cfg{50.0, 300.0, 1.0};
  const auto r = detect_stay_regions(PointSequence("dev", pts), cfg);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].first, 0u);
  EXPECT_EQ(r[0].last, 19u);
}

TEST(StayRegions, ConstantMotionHasNone) {
  StayRegionConfig cfg{100.0, 300.0, 1.0};
  EXPECT_TRUE(detect_stay_regions(PointSequence("dev", line(38.9, 0, 200, 10.0, 30.0)), cfg).empty());
  // same without recorded speeds (pairwise substitution)
  EXPECT_TRUE(detect_stay_regions(PointSequence("dev", line(38.9, 0, 200, 10.0, 30.0, 10.0)), cfg).empty());
}

TEST(StayRegions, DwellOfExactlyTIsEmitted) {
  StayRegionConfig cfg{100.0, 300.0, 1.5};
  auto pts = dwell(38.9, 0, 6, 60.0);  // spans exactly 300 s
  EXPECT_EQ(detect_stay_regions(PointSequence("dev", pts), cfg).size(), 1u);
  pts.pop_back();
  pts.push_back(fix(38.9, -77.0, 299.0, 0.0));
  EXPECT_TRUE(detect_stay_regions(PointSequence("dev", pts), cfg).empty());
}

TEST(StayRegions, SpeedBoundIsInclusive) {
  StayRegionConfig cfg{100.0, 300.0, 1.5};
  std::vector<LocationPoint> pts;
  for (int i = 0; i < 6; ++i) pts.push_back(fix(38.9, -77.0, i * 60.0, 1.5));
  EXPECT_EQ(detect_stay_regions(PointSequence("dev", pts), cfg).size(), 1u);
  pts[3].speed = 1.5000001;
  EXPECT_TRUE(detect_stay_regions(PointSequence("dev", pts), cfg).empty());
}

TEST(StayRegions, RoamBoundIsMeasuredFromAnchor) {
  // each step is 60 m, so consecutive fixes are close but the third is 120 m from the anchor
  StayRegionConfig cfg{100.0, 100.0, 1.5};
  std::vector<LocationPoint> pts;
  for (int i = 0; i < 4; ++i) pts.push_back(fix(38.9 + 60.0 * i / kMetersPerDegLat, -77.0, i * 100.0, 0.0));
  const auto r = detect_stay_regions(PointSequence("dev", pts), cfg);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].first, 0u);
  EXPECT_EQ(r[0].last, 1u);
  EXPECT_EQ(r[1].first, 2u);
  EXPECT_EQ(r[1].last, 3u);
}

TEST(StayRegions, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(1234, seed));
    const auto n = static_cast<std::size_t>(rng.below(500) + 1);
    const auto seq = random_sequence(rng, n);
    StayRegionConfig cfg{rng.uniform(30.0, 200.0), rng.uniform(60.0, 900.0), rng.uniform(0.5, 3.0)};
    ASSERT_EQ(detect_stay_regions(seq, cfg), oracle_regions(seq, cfg)) << "seed " << seed;
  }
}

TEST(StayRegions, RegionsAreDisjointAndOrdered) {
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const auto seq = random_sequence(rng, 300);
    const auto r = detect_stay_regions(seq, {});
    for (std::size_t k = 0; k < r.size(); ++k) {
      EXPECT_LE(r[k].first, r[k].last);
      if (k > 0) {
        EXPECT_GT(r[k].first, r[k - 1].last);
      }
    }
  }
}

TEST(SplitByStayRegions, ThirtyMovingPointsGiveOneThirtyTwoPointTrip) {
  auto pts = dwell(38.9, 0, 10, 60.0);
  auto move = line(38.9 + 200.0 / kMetersPerDegLat, 600, 30, 10.0, 30.0, 10.0);
  pts.insert(pts.end(), move.begin(), move.end());
  const double far = 38.9 + 20000.0 / kMetersPerDegLat;
  auto tail = dwell(far, 600 + 30 * 30, 10, 60.0);
  pts.insert(pts.end(), tail.begin(), tail.end());
  const PointSequence seq("dev", pts);
  const auto regions = detect_stay_regions(seq, {});
  ASSERT_EQ(regions.size(), 2u);
  const auto trips = split_by_stay_regions(seq, regions);
  ASSERT_EQ(trips.size(), 1u);
  EXPECT_EQ(trips[0].points.size(), 32u);
  EXPECT_EQ(trips[0].first_index, regions[0].last);
  EXPECT_EQ(trips[0].start_time(), regions[0].exit_time);
  EXPECT_EQ(trips[0].end_time(), regions[1].entry_time);
  EXPECT_EQ(trips[0].trip_id, "dev:0");
}

TEST(SplitByStayRegions, NoRegionsMeansWholeSequence) {
  const PointSequence seq("dev", line(38.9, 0, 40, 10.0, 30.0));
  const auto trips = split_by_stay_regions(seq, {});
  ASSERT_EQ(trips.size(), 1u);
  EXPECT_EQ(trips[0].points.size(), 40u);
}

TEST(SplitByStayRegions, BackToBackRegionsEmitNothing) {
  auto pts = dwell(38.9, 0, 6, 60.0);
  auto second = dwell(38.9 + 500.0 / kMetersPerDegLat, 360, 6, 60.0);
  pts.insert(pts.end(), second.begin(), second.end());
  const PointSequence seq("dev", pts);
  const auto regions = detect_stay_regions(seq, {});
  ASSERT_EQ(regions.size(), 2u);
  EXPECT_TRUE(split_by_stay_regions(seq, regions).empty());
}

TEST(SplitByStayRegions, TripsAreContiguousSlices) {
  Rng rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    const auto seq = random_sequence(rng, 400);
    const auto trips = split_by_stay_regions(seq, detect_stay_regions(seq, {}));
    for (const auto& t : trips) {
      ASSERT_GE(t.points.size(), 2u);
      for (std::size_t k = 0; k < t.points.size(); ++k) {
        EXPECT_EQ(t.points[k].timestamp, seq[t.first_index + k].timestamp);
      }
    }
  }
}

TEST(SplitByThresholds, SingleObservationGivesNoTrips) {
  EXPECT_TRUE(split_by_thresholds(PointSequence("dev", {fix(38.9, -77.0, 0)}), {}).empty());
}

TEST(SplitByThresholds, FourHourGapSplits) {
  auto pts = line(38.9, 0, 10, 5.0, 30.0);
  auto later = line(38.9 + 1350.0 / kMetersPerDegLat, 4 * 3600.0 + 270.0, 10, 5.0, 30.0);
  pts.insert(pts.end(), later.begin(), later.end());
  const auto trips = split_by_thresholds(PointSequence("dev", pts), {});
  ASSERT_EQ(trips.size(), 2u);
  EXPECT_EQ(trips[0].points.size(), 10u);
  EXPECT_EQ(trips[1].points.size(), 10u);
}

TEST(SplitByThresholds, SteadyHundredPointsIsOneTrip) {
  const auto trips = split_by_thresholds(PointSequence("dev", line(38.9, 0, 100, 10.0, 30.0)), {2000.0, 50.0, 1800.0});
  ASSERT_EQ(trips.size(), 1u);
  EXPECT_EQ(trips[0].points.size(), 100u);
}

TEST(SplitByThresholds, IsolatedPointsAreRemoved) {
  // a lone fix between two long gaps forms a one-point run that is discarded
  auto pts = line(38.9, 0, 5, 5.0, 30.0);
  pts.push_back(fix(38.9, -77.0, 10000));
  auto tail = line(38.9, 20000, 5, 5.0, 30.0);
  pts.insert(pts.end(), tail.begin(), tail.end());
  const auto trips = split_by_thresholds(PointSequence("dev", pts), {});
  ASSERT_EQ(trips.size(), 2u);
  for (const auto& t : trips) EXPECT_EQ(t.points.size(), 5u);
}
