#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modeforge/csv.hpp"
#include "modeforge/error.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/trip_extraction.hpp"

namespace modeforge {

struct ModeShares {
  std::array<std::uint64_t, kNumModes> counts{};
  std::array<double, kNumModes> shares{};
  std::uint64_t total = 0;
};

inline ModeShares mode_shares(const std::vector<Mode>& labels) {
  if (labels.empty()) throw Error(ErrorKind::InvalidArgument, "mode shares of an empty trip set");
  ModeShares s;
  for (auto m : labels) ++s.counts[index_of(m)];
  s.total = labels.size();
  for (std::size_t k = 0; k < kNumModes; ++k) {
    s.shares[k] = static_cast<double>(s.counts[k]) / static_cast<double>(s.total);
  }
  return s;
}

inline ModeShares mode_shares(const std::vector<Trip>& trips) {
  std::vector<Mode> labels;
  labels.reserve(trips.size());
  for (const auto& t : trips) {
    if (!t.mode_label) throw Error(ErrorKind::InvalidArgument, "trip '" + t.trip_id + "' is unlabeled");
    labels.push_back(*t.mode_label);
  }
  return mode_shares(labels);
}

/// Bins [e0, e1), [e1, e2), ..., [e_{n-1}, e_n]; values below e0 fall in the
/// first bin and values above e_n in the last.
class BinEdges {
 public:
  explicit BinEdges(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two bin edges");
    for (std::size_t i = 1; i < edges_.size(); ++i) {
      if (!(edges_[i] > edges_[i - 1])) {
        throw Error(ErrorKind::InvalidArgument, "bin edges must be strictly increasing");
      }
    }
  }

  std::size_t bins() const { return edges_.size() - 1; }
  double lo(std::size_t b) const { return edges_[b]; }
  double hi(std::size_t b) const { return edges_[b + 1]; }
  const std::vector<double>& edges() const { return edges_; }

  std::size_t bin_of(double v) const {
    const auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, v);
    return static_cast<std::size_t>(it - (edges_.begin() + 1));
  }

 private:
  std::vector<double> edges_;
};

struct Histogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  double proportion(std::size_t b) const {
    return total ? static_cast<double>(counts[b]) / static_cast<double>(total) : 0.0;
  }
};

/// One trip's demand-relevant attributes.
struct TripRecord {
  std::string trip_id;
  Mode mode = Mode::Car;
  double trip_time = 0.0;    // seconds
  double trip_length = 0.0;  // meters
};

enum class DemandMetric { TripTime, TripLength };

inline const char* to_string(DemandMetric m) {
  return m == DemandMetric::TripTime ? "trip_time" : "trip_length";
}

inline double metric_value(const TripRecord& t, DemandMetric m) {
  return m == DemandMetric::TripTime ? t.trip_time : t.trip_length;
}

/// Reference proportions keyed by mode, then bin.
using ReferenceHistograms = std::array<std::optional<std::vector<double>>, kNumModes>;

struct DistributionReport {
  DemandMetric metric = DemandMetric::TripTime;
  BinEdges edges{{0.0, 1.0}};
  std::array<Histogram, kNumModes> histograms;
  std::optional<ReferenceHistograms> reference;
  /// Per mode: 0.5 * sum_b |p_b - q_b| when a reference exists for that mode.
  std::array<std::optional<double>, kNumModes> total_variation;
};

inline std::array<Histogram, kNumModes> mode_histograms(const std::vector<TripRecord>& trips,
                                                        DemandMetric metric, const BinEdges& edges) {
  std::array<Histogram, kNumModes> h;
  for (auto& x : h) x.counts.assign(edges.bins(), 0);
  for (const auto& t : trips) {
    auto& x = h[index_of(t.mode)];
    ++x.counts[edges.bin_of(metric_value(t, metric))];
    ++x.total;
  }
  return h;
}

inline DistributionReport distribution_report(const std::vector<TripRecord>& trips,
                                              DemandMetric metric, const BinEdges& edges,
                                              const std::optional<ReferenceHistograms>& reference = {}) {
  DistributionReport r;
  r.metric = metric;
  r.edges = edges;
  r.histograms = mode_histograms(trips, metric, edges);
  r.reference = reference;
  if (reference) {
    for (std::size_t k = 0; k < kNumModes; ++k) {
      const auto& ref = (*reference)[k];
      if (!ref) continue;
      if (ref->size() != edges.bins()) {
        throw Error(ErrorKind::InvalidArgument, std::string("reference histogram for ") +
                                                    to_string(mode_at(k)) + " has the wrong bin count");
      }
      double tv = 0.0;
      for (std::size_t b = 0; b < edges.bins(); ++b) {
        tv += std::abs(r.histograms[k].proportion(b) - (*ref)[b]);
      }
      r.total_variation[k] = 0.5 * tv;
    }
  }
  return r;
}

/// Parses `mode,bin_lo,bin_hi,proportion`; every row's bin must match one of
/// `edges` exactly. Bins a mode omits are taken as proportion 0.
inline ReferenceHistograms parse_reference_histograms(const csv::Table& t, const BinEdges& edges) {
  const auto c_mode = t.column("mode");
  const auto c_lo = t.column("bin_lo");
  const auto c_hi = t.column("bin_hi");
  const auto c_p = t.column("proportion");
  ReferenceHistograms ref;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const Mode m = parse_mode_or_throw(csv::trim(t.at(r, c_mode)));
    const double lo = t.number(r, c_lo);
    const double hi = t.number(r, c_hi);
    std::optional<std::size_t> bin;
    for (std::size_t b = 0; b < edges.bins(); ++b) {
      if (edges.lo(b) == lo && edges.hi(b) == hi) bin = b;
    }
    if (!bin) {
      throw Error(ErrorKind::Parse, t.source() + ": record " + std::to_string(r) +
                                        ": bin [" + csv::format_double(lo) + ", " +
                                        csv::format_double(hi) + "] is not in the configured edges");
    }
    auto& v = ref[index_of(m)];
    if (!v) v = std::vector<double>(edges.bins(), 0.0);
    (*v)[*bin] = t.number(r, c_p);
  }
  return ref;
}

}  // namespace modeforge
