#pragma once

// Helpers shared by the unit tests and the acceptance runner (no gtest here).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "modeforge/evaluation.hpp"
#include "modeforge/network.hpp"
#include "modeforge/rng.hpp"
#include "modeforge/trip_extraction.hpp"
#include "modeforge/wide_deep.hpp"

namespace modeforge::testkit {

struct GradCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Small random joint net: d inputs, 1..3 hidden layers of width <= 8, random
/// combine weights and a random labelled batch.
struct GradProblem {
  JointParams params;
  Eigen::MatrixXd x;
  std::vector<std::size_t> y;
};

inline GradProblem random_grad_problem(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 77));
  const auto d = static_cast<std::size_t>(rng.below(6) + 1);
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.hidden.clear();
  const auto depth = rng.below(3) + 1;
  for (std::uint64_t l = 0; l < depth; ++l) cfg.hidden.push_back(static_cast<std::size_t>(rng.below(8) + 1));
  GradProblem g;
  g.params = initialize_params(d, cfg);
  for (auto* t : g.params.tensors()) {
    for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] += rng.normal(0.0, 0.3);
  }
  g.params.combine(0, 0) = rng.uniform(0.5, 1.5);
  g.params.combine(1, 0) = rng.uniform(0.5, 1.5);
  const auto b = static_cast<Eigen::Index>(rng.below(6) + 3);
  g.x.resize(b, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < g.x.size(); ++i) g.x.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < b; ++i) g.y.push_back(static_cast<std::size_t>(rng.below(kNumModes)));
  return g;
}

/// Central differences over every scalar of every tensor. Relative error is
/// |a - n| / max(|a|, |n|, floor); the floor keeps rounding noise on
/// near-zero entries from dominating.
inline GradCheck check_gradient(const GradProblem& g, double h = 1e-5, double floor = 1e-6) {
  GradCheck out;
  const auto analytic = joint_loss_and_gradient(g.params, g.x, g.y).gradient;
  const auto a_tensors = analytic.tensors();
  JointParams probe = g.params;
  auto p_tensors = probe.tensors();
  for (std::size_t t = 0; t < p_tensors.size(); ++t) {
    Tensor& theta = *p_tensors[t];
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double saved = theta.data()[i];
      theta.data()[i] = saved + h;
      const double up = joint_loss(probe, g.x, g.y);
      theta.data()[i] = saved - h;
      const double down = joint_loss(probe, g.x, g.y);
      theta.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = a_tensors[t]->data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      out.max_relative_error = std::max(out.max_relative_error, std::abs(a - numeric) / denom);
      ++out.checked;
    }
  }
  return out;
}

/// Confusion panels (rows reported, columns detected; Car, Metro, Bus, Walk)
/// with their printed recall/precision/overall percentages.
struct PublishedPanel {
  const char* name;
  std::array<std::array<std::uint64_t, kNumModes>, kNumModes> counts;
  std::array<double, kNumModes> recall;
  std::array<double, kNumModes> precision;
  double overall;
};

inline const std::array<PublishedPanel, 4>& published_panels() {
  static const std::array<PublishedPanel, 4> panels = {{
      {"random_forest_without_network",
       {{{135, 34, 23, 3}, {23, 479, 25, 7}, {23, 42, 90, 5}, {1, 4, 4, 111}}},
       {69.2, 89.7, 56.3, 92.5},
       {74.2, 85.7, 63.4, 88.1},
       80.8},
      {"random_forest_with_network",
       {{{181, 4, 7, 3}, {7, 507, 13, 7}, {15, 43, 101, 1}, {0, 5, 2, 113}}},
       {92.8, 95.0, 63.1, 94.2},
       {89.2, 90.7, 82.1, 91.1},
       89.4},
      {"wide_deep_without_network",
       {{{172, 8, 13, 2}, {8, 508, 16, 2}, {11, 14, 132, 3}, {0, 2, 1, 117}}},
       {88.2, 95.1, 82.5, 97.5},
       {90.1, 95.5, 81.5, 94.4},
       92.1},
      {"wide_deep_with_network",
       {{{194, 1, 0, 0}, {0, 525, 8, 1}, {1, 10, 149, 0}, {1, 1, 1, 117}}},
       {99.5, 98.3, 93.1, 97.5},
       {99.0, 97.8, 94.3, 99.2},
       97.6},
  }};
  return panels;
}

inline constexpr double kMetersPerDegree = kEarthRadius * kDegToRad;

// O(n^2) oracle: for every admissible anchor, the maximal run is the largest
// j such that no point of (i, j] violates the distance or speed bound.
inline std::vector<StayRegion> oracle_regions(const PointSequence& seq, const StayRegionConfig& cfg) {
  const std::size_t n = seq.size();
  std::vector<double> speed(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (seq[i].speed) {
      speed[i] = *seq[i].speed;
    } else if (i > 0) {
      speed[i] = haversine_distance(seq[i - 1].position(), seq[i].position()) /
                 (seq[i].timestamp - seq[i - 1].timestamp);
    }
  }
  std::vector<StayRegion> out;
  std::size_t i = 0;
  while (i < n) {
    bool found = false;
    if (speed[i] <= cfg.max_speed) {
      std::vector<int> bad(n, 0);  // prefix count of violations after the anchor
      for (std::size_t k = i + 1; k < n; ++k) {
        const bool violates = speed[k] > cfg.max_speed ||
                              haversine_distance(seq[i].position(), seq[k].position()) > cfg.max_roam_distance;
        bad[k] = bad[k - 1] + (violates ? 1 : 0);
      }
      std::size_t j = i;
      for (std::size_t cand = n - 1; cand > i; --cand) {
        if (bad[cand] - bad[i] == 0) {
          j = cand;
          break;
        }
      }
      if (seq[j].timestamp - seq[i].timestamp >= cfg.min_dwell_time) {
        out.push_back({seq.device_id(), i, j, seq[i].position(), seq[i].timestamp, seq[j].timestamp});
        i = j + 1;
        found = true;
      }
    }
    if (!found) ++i;
  }
  return out;
}

inline PointSequence random_sequence(Rng& rng, std::size_t n) {
  std::vector<LocationPoint> pts;
  double lat = 38.9, lon = -77.0, t = 0.0;
  bool moving = rng.uniform() < 0.5;
  const bool with_speed = rng.uniform() < 0.5;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < 0.1) moving = !moving;
    const double dt = rng.uniform(5.0, 200.0);
    t += std::round(dt);
    double v = 0.0;
    if (moving) {
      v = rng.uniform(0.5, 15.0);
      const double heading = rng.uniform(0.0, 6.283);
      lat += v * dt * std::cos(heading) / kMetersPerDegree;
      lon += v * dt * std::sin(heading) / (kMetersPerDegree * std::cos(lat * kDegToRad));
    } else {
      lat += rng.normal(0.0, 15.0) / kMetersPerDegree;
      lon += rng.normal(0.0, 15.0) / (kMetersPerDegree * std::cos(lat * kDegToRad));
    }
    std::optional<double> sp;
    if (with_speed && rng.uniform() < 0.8) sp = std::abs(v + rng.normal(0.0, 0.5));
    LocationPoint p;
    p.device_id = "dev";
    p.latitude = lat;
    p.longitude = lon;
    p.timestamp = t;
    p.speed = sp;
    pts.push_back(p);
  }
  return PointSequence("dev", std::move(pts));
}

inline NearestSegment linear_scan(const LatLon& p, const std::vector<GeoSegment>& segs) {
  NearestSegment best;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    NearestSegment cand{segment_point_distance(p, segs[s]), s};
    if (cand.better_than(best)) best = cand;
  }
  return best;
}

inline std::vector<GeoSegment> random_segments(Rng& rng, std::size_t n, double span_deg, double max_len_deg) {
  std::vector<GeoSegment> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LatLon a{38.9 + rng.uniform(-span_deg, span_deg), -77.0 + rng.uniform(-span_deg, span_deg)};
    const LatLon b{a.lat + rng.uniform(-max_len_deg, max_len_deg), a.lon + rng.uniform(-max_len_deg, max_len_deg)};
    out.push_back({a, b});
  }
  return out;
}

}  // namespace modeforge::testkit
