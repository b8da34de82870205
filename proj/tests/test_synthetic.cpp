#include <map>

#include <gtest/gtest.h>

#include "modeforge/synthetic.hpp"

using namespace modeforge;

namespace {

const SyntheticNetworks& networks() {
  static const SyntheticNetworks n = generate_networks(SyntheticArea{});
  return n;
}

SyntheticSpec small_spec(std::size_t trips, std::uint64_t seed) {
  SyntheticSpec s;
  s.total_trips = trips;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(LargestRemainder, SurveyMixOver1009Trips) {
  const auto c = largest_remainder(1009, SyntheticSpec{}.mode_mix);
  EXPECT_EQ(c, (std::array<std::size_t, kNumModes>{195, 534, 160, 120}));
}

TEST(LargestRemainder, SumsToTotalAndTiesGoLow) {
  for (std::size_t n : {0, 1, 3, 7, 1000, 2001}) {
    const auto c = largest_remainder(n, {1, 1, 1, 1});
    EXPECT_EQ(c[0] + c[1] + c[2] + c[3], n);
    EXPECT_GE(c[0], c[3]);
  }
  EXPECT_EQ(largest_remainder(3, {1, 1, 1, 1}), (std::array<std::size_t, kNumModes>{1, 1, 1, 0}));
  EXPECT_THROW(largest_remainder(3, {0, 0, 0, 0}), Error);
}

TEST(Networks, AllThreeKindsPresent) {
  const auto& n = networks();
  EXPECT_EQ(n.rail.size(), SyntheticArea{}.rail_lines);
  EXPECT_FALSE(n.bus.empty());
  EXPECT_FALSE(n.highway.empty());
  const auto set = n.build();
  EXPECT_GT(set.rail.segments().size(), 10u);
}

TEST(Synthetic, WalkOnlyNeedsNoNetworks) {
  SyntheticSpec s;
  s.counts = std::array<std::size_t, kNumModes>{0, 0, 0, 100};
  const auto c = generate_synthetic(s, SyntheticNetworks{});
  ASSERT_EQ(c.trips.size(), 100u);
  for (const auto& t : c.trips) EXPECT_EQ(t.mode, Mode::Walk);
  s.counts = std::array<std::size_t, kNumModes>{1, 0, 0, 0};
  EXPECT_THROW(generate_synthetic(s, SyntheticNetworks{}), Error);
}

TEST(Synthetic, CountsAndWellFormedPoints) {
  SyntheticSpec s = small_spec(0, 5);
  s.counts = std::array<std::size_t, kNumModes>{19, 53, 16, 12};
  const auto c = generate_synthetic(s, networks());
  std::array<std::size_t, kNumModes> per{};
  for (const auto& t : c.trips) {
    ++per[index_of(t.mode)];
    EXPECT_GT(t.end_time, t.start_time);
  }
  EXPECT_EQ(per, *s.counts);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    EXPECT_NO_THROW(validate_point(c.points[i]));
    if (i && c.points[i].device_id == c.points[i - 1].device_id) {
      EXPECT_GE(c.points[i].timestamp, c.points[i - 1].timestamp);
    }
  }
}

TEST(Synthetic, SeedDeterminesOutput) {
  const auto a = generate_synthetic(small_spec(40, 1), networks());
  const auto b = generate_synthetic(small_spec(40, 1), networks());
  const auto c = generate_synthetic(small_spec(40, 2), networks());
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    ASSERT_EQ(a.points[i].latitude, b.points[i].latitude);
    ASSERT_EQ(a.points[i].timestamp, b.points[i].timestamp);
  }
  EXPECT_TRUE(a.points.size() != c.points.size() || a.points[5].latitude != c.points[5].latitude);
}

TEST(Synthetic, MetroFixesAreSparserThanCar) {
  const auto c = generate_synthetic(small_spec(400, 3), networks());
  std::map<Mode, std::pair<double, double>> fixes_time;
  for (const auto& t : c.trips) {
    fixes_time[t.mode].first += static_cast<double>(t.n_points);
    fixes_time[t.mode].second += t.duration();
  }
  const double metro = fixes_time[Mode::Metro].first / fixes_time[Mode::Metro].second;
  const double car = fixes_time[Mode::Car].first / fixes_time[Mode::Car].second;
  EXPECT_LE(metro, 0.5 * car);
}

TEST(Synthetic, DefaultExtractionRecoversTrips) {
  const auto c = generate_synthetic(small_spec(300, 4), networks());
  const auto trips = extract_trips(c.points, ExtractionConfig{});
  const auto r = recovery(c.trips, trips);
  EXPECT_EQ(r.total, 300u);
  EXPECT_GE(r.rate(), 0.95);
}
