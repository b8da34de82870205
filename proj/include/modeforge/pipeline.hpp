#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modeforge/classifier.hpp"
#include "modeforge/config.hpp"
#include "modeforge/corpus.hpp"
#include "modeforge/csv.hpp"
#include "modeforge/demand.hpp"
#include "modeforge/evaluation.hpp"
#include "modeforge/features.hpp"
#include "modeforge/io.hpp"
#include "modeforge/log.hpp"
#include "modeforge/model_io.hpp"
#include "modeforge/network.hpp"
#include "modeforge/parallel.hpp"
#include "modeforge/synthetic.hpp"

namespace modeforge::pipeline {

namespace files {
inline constexpr const char* kFilteredPoints = "filtered_points.csv";
inline constexpr const char* kTrips = "trips.csv";
inline constexpr const char* kTripPoints = "trip_points.csv";
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kHistory = "training_history.csv";
inline constexpr const char* kCvMetrics = "cv_metrics.csv";
inline constexpr const char* kCvSummary = "cv_summary.json";
inline constexpr const char* kImputed = "imputed_trips.csv";
inline constexpr const char* kModeShares = "mode_shares.csv";
inline constexpr const char* kTotalVariation = "distribution_total_variation.csv";
}  // namespace files

/// Error raised by a stage; what() carries stage, error kind and the
/// underlying message (which names the file and record when known).
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), "stage=" + stage + " kind=" + to_string(cause.kind()) + ": " + cause.what()),
        stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline void require_file(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::exists(p)) {
    throw Error(ErrorKind::Io, "missing " + what + " '" + p.string() + "'");
  }
}

inline NetworkSet load_configured_networks(const PipelineConfig& c) {
  require_file(c.paths.rail, "rail network");
  require_file(c.paths.bus, "bus network");
  require_file(c.paths.highway, "highway network");
  return load_networks(c.paths.rail, c.paths.bus, c.paths.highway, c.features.grid_cell);
}

// ------------------------------------------------------------------ stages

inline void cmd_synth(const PipelineConfig& c) {
  if (c.paths.ground_truth.empty()) throw Error(ErrorKind::Config, "synth needs paths.ground_truth");
  const auto nets = generate_networks(c.synth.area);
  csv::Writer::write_atomically(c.paths.rail, to_geojson(nets.rail));
  const auto bus_file = c.paths.bus.extension().empty() ? c.paths.bus / "shapes.txt" : c.paths.bus;
  csv::Writer::write_atomically(bus_file, to_gtfs_shapes(nets.bus));
  csv::Writer::write_atomically(c.paths.highway, to_geojson(nets.highway));
  const auto corpus = generate_synthetic(c.synth.spec, nets, c.synth.area);
  io::points_csv(corpus.points).save(c.paths.points);
  io::ground_truth_csv(corpus.trips).save(c.paths.ground_truth);
  log().info("synth: {} points, {} ground-truth trips", corpus.points.size(), corpus.trips.size());
}

inline void cmd_filter(const PipelineConfig& c) {
  require_file(c.paths.points, "points file");
  const auto devices = group_by_device(io::read_points(c.paths.points));
  const auto kept = filter_devices(devices, c.extraction.filter, c.threads);
  std::size_t before = 0, after = 0;
  for (const auto& d : devices) before += d.size();
  for (const auto& d : kept) after += d.size();
  io::points_csv(kept).save(c.paths.out(files::kFilteredPoints));
  log().info("filter: kept {} of {} points across {} devices", after, before, devices.size());
}

inline void cmd_segment(const PipelineConfig& c) {
  const auto in = c.paths.out(files::kFilteredPoints);
  require_file(in, "filtered points (run `filter` first)");
  const auto devices = group_by_device(io::read_points(in));
  const auto trips = segment_devices(devices, c.extraction, c.threads);
  io::trips_csv(trips).save(c.paths.out(files::kTrips));
  io::trip_points_csv(trips).save(c.paths.out(files::kTripPoints));
  log().info("segment: {} trips from {} devices ({})", trips.size(), devices.size(),
             to_string(c.extraction.method));
}

inline void cmd_features(const PipelineConfig& c) {
  const auto in = c.paths.out(files::kTripPoints);
  require_file(in, "trip points (run `segment` first)");
  if (!c.paths.ground_truth.empty()) require_file(c.paths.ground_truth, "ground truth");
  const auto networks = load_configured_networks(c);
  auto trips = io::read_trip_points(in);
  if (!c.paths.ground_truth.empty()) {
    const auto gt = io::read_ground_truth(c.paths.ground_truth);
    const auto n = label_from_ground_truth(trips, gt, c.features.label_min_overlap);
    log().info("features: {} of {} trips matched a ground-truth span", n, trips.size());
  }
  std::vector<FeatureVector> rows(trips.size());
  parallel_for(trips.size(), c.threads, [&](std::size_t i) {
    try {
      rows[i] = extract_features(trips[i], networks);
    } catch (const Error& e) {
      throw Error(e.kind(), "trip '" + trips[i].trip_id + "': " + e.what());
    }
  });
  if (!rows.empty()) normalize_in_place(rows);
  io::features_csv(rows).save(c.paths.out(files::kFeatures));
  log().info("features: {} trips", rows.size());
}

inline std::vector<FeatureVector> read_labeled_features(const PipelineConfig& c) {
  const auto in = c.paths.out(files::kFeatures);
  require_file(in, "features (run `features` first)");
  std::vector<FeatureVector> labeled;
  for (auto& fv : io::read_features(in)) {
    if (fv.label) labeled.push_back(std::move(fv));
  }
  if (labeled.empty()) throw Error(ErrorKind::InvalidArgument, in.string() + ": no labeled trips");
  return labeled;
}

inline void cmd_train(const PipelineConfig& c) {
  const auto rows = read_labeled_features(c);
  const auto data = make_dataset(rows, c.model.selection);
  const auto model = fit_classifier(data, c.model);
  save_model(model, c.paths.model_path());
  if (model.is_network()) {
    csv::Writer w({"epoch", "loss"});
    const auto& h = model.network().history;
    for (std::size_t e = 0; e < h.size(); ++e) w.row({std::to_string(e + 1), csv::format_double(h[e])});
    w.save(c.paths.out(files::kHistory));
  }
  log().info("train: {} on {} labeled trips -> {}", to_string(c.model.kind), rows.size(),
             c.paths.model_path().string());
}

inline std::string file_stem_for(const std::string& variant) {
  std::string s;
  for (char ch : variant) {
    if (ch == '+') {
      s += "_with_";
    } else if (ch == '-') {
      s += "_without_";
    } else {
      s.push_back(ch);
    }
  }
  return s;
}

inline nlohmann::json percent_json(const std::optional<double>& v) {
  return v ? nlohmann::json(round_percent(*v)) : nlohmann::json(nullptr);
}

inline void cmd_evaluate(const PipelineConfig& c) {
  const auto rows = read_labeled_features(c);
  csv::Writer metrics({"model", "seed", "fold", "n_test", "correct", "accuracy", "total_loss", "average_loss"});
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& name : c.evaluate.models) {
    const auto variant = parse_model_variant(name, c.features.selection);
    ModelSpec spec = c.model;
    spec.kind = variant.kind;
    spec.selection = variant.selection;
    const auto data = make_dataset(rows, spec.selection);
    const auto r = cross_validate(data, spec, c.evaluate.cv);
    for (const auto& f : r.folds) {
      metrics.row({name, std::to_string(f.seed), std::to_string(f.fold), std::to_string(f.n_test),
                   std::to_string(f.correct), csv::format_double(f.accuracy), csv::format_double(f.total_loss),
                   csv::format_double(f.average_loss)});
    }
    csv::Writer cm({"reported", "detected_car", "detected_metro", "detected_bus", "detected_walk", "recall_percent"});
    const auto pr = precision_recall(r.pooled);
    for (std::size_t i = 0; i < kNumModes; ++i) {
      std::vector<std::string> row{to_string(mode_at(i))};
      for (std::size_t j = 0; j < kNumModes; ++j) row.push_back(std::to_string(r.pooled.counts[i][j]));
      row.push_back(pr.recall[i] ? csv::format_fixed(round_percent(*pr.recall[i]), 1) : "");
      cm.row(row);
    }
    std::vector<std::string> prow{"precision_percent"};
    for (std::size_t j = 0; j < kNumModes; ++j) {
      prow.push_back(pr.precision[j] ? csv::format_fixed(round_percent(*pr.precision[j]), 1) : "");
    }
    prow.push_back(pr.accuracy ? csv::format_fixed(round_percent(*pr.accuracy), 1) : "");
    cm.row(prow);
    cm.save(c.paths.out("confusion_" + file_stem_for(name) + ".csv"));

    nlohmann::json m;
    m["model"] = to_string(variant.kind);
    m["features"] = variant.selection.names();
    m["folds"] = c.evaluate.cv.folds;
    m["seeds"] = c.evaluate.cv.seeds;
    m["predictions"] = r.predictions;
    m["correct"] = r.pooled.trace();
    m["accuracy"] = r.accuracy;
    m["accuracy_percent"] = round_percent(r.accuracy);
    m["total_loss_all_held_out"] = r.total_loss;
    m["average_loss"] = r.average_loss;
    m["mean_fold_total_loss"] = r.mean_fold_total_loss;
    nlohmann::json prec = nlohmann::json::object(), rec = nlohmann::json::object();
    for (std::size_t k = 0; k < kNumModes; ++k) {
      prec[to_string(mode_at(k))] = percent_json(pr.precision[k]);
      rec[to_string(mode_at(k))] = percent_json(pr.recall[k]);
    }
    m["precision_percent"] = prec;
    m["recall_percent"] = rec;
    summary[name] = m;
    log().info("evaluate: {} accuracy {:.4f} over {} held-out predictions (slowest fit {:.1f} s)", name,
               r.accuracy, r.predictions, r.max_fit_seconds);
  }
  metrics.save(c.paths.out(files::kCvMetrics));
  csv::Writer::write_atomically(c.paths.out(files::kCvSummary), summary.dump(2) + "\n");
}

inline void cmd_impute(const PipelineConfig& c) {
  const auto model_path = c.paths.model_path();
  require_file(model_path, "model (run `train` first)");
  const auto in = c.paths.out(files::kFeatures);
  require_file(in, "features (run `features` first)");
  const auto model = load_model(model_path);
  const auto rows = io::read_features(in);
  const auto data = make_dataset(rows, model.selection(), false);
  const auto pred = model.predict(data.x);
  std::vector<io::ImputedTrip> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& t = out[i];
    t.trip_id = rows[i].trip_id;
    t.mode = mode_at(pred.labels[i]);
    t.source = LabelSource::Imputed;
    t.trip_time = rows[i].raw[static_cast<std::size_t>(Feature::TripTime)];
    t.trip_length = rows[i].raw[static_cast<std::size_t>(Feature::TripDistance)];
    for (std::size_t k = 0; k < kNumModes; ++k) {
      t.probability[k] = pred.probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
  }
  io::imputed_csv(out).save(c.paths.out(files::kImputed));
  log().info("impute: labeled {} trips with {}", out.size(), to_string(model.kind()));
}

inline void write_distribution(const PipelineConfig& c, const std::vector<TripRecord>& trips, DemandMetric metric,
                               const std::vector<double>& edges_v, const std::filesystem::path& reference,
                               csv::Writer& tv) {
  const BinEdges edges(edges_v);
  std::optional<ReferenceHistograms> ref;
  if (!reference.empty()) {
    require_file(reference, std::string("reference histogram for ") + to_string(metric));
    ref = parse_reference_histograms(csv::Table::read(reference), edges);
  }
  const auto rep = distribution_report(trips, metric, edges, ref);
  csv::Writer w({"mode", "bin_lo", "bin_hi", "count", "proportion", "reference", "abs_diff"});
  for (std::size_t k = 0; k < kNumModes; ++k) {
    const auto& h = rep.histograms[k];
    const auto& r = ref ? (*ref)[k] : std::optional<std::vector<double>>{};
    for (std::size_t b = 0; b < edges.bins(); ++b) {
      std::vector<std::string> row{to_string(mode_at(k)), csv::format_double(edges.lo(b)),
                                   csv::format_double(edges.hi(b)), std::to_string(h.counts[b]),
                                   csv::format_fixed(h.proportion(b), 6)};
      if (r) {
        row.push_back(csv::format_fixed((*r)[b], 6));
        row.push_back(csv::format_fixed(std::abs(h.proportion(b) - (*r)[b]), 6));
      } else {
        row.insert(row.end(), {"", ""});
      }
      w.row(row);
    }
    if (rep.total_variation[k]) {
      tv.row({to_string(metric), to_string(mode_at(k)), csv::format_fixed(*rep.total_variation[k], 6)});
    }
  }
  w.save(c.paths.out(std::string("distribution_") + to_string(metric) + ".csv"));
}

inline void cmd_report(const PipelineConfig& c) {
  const auto in = c.paths.out(files::kImputed);
  require_file(in, "labeled trips (run `impute` first)");
  const auto labeled = io::read_labeled_trips(csv::Table::read(in));
  std::vector<Mode> modes;
  std::vector<TripRecord> records;
  for (const auto& t : labeled) {
    modes.push_back(t.mode);
    records.push_back({t.trip_id, t.mode, t.trip_time, t.trip_length});
  }
  const auto shares = mode_shares(modes);
  csv::Writer w({"mode", "count", "share", "share_percent"});
  for (std::size_t k = 0; k < kNumModes; ++k) {
    w.row({to_string(mode_at(k)), std::to_string(shares.counts[k]), csv::format_fixed(shares.shares[k], 6),
           csv::format_fixed(shares.shares[k] * 100.0, 2)});
  }
  w.row({"total", std::to_string(shares.total), csv::format_fixed(1.0, 6), csv::format_fixed(100.0, 2)});
  w.save(c.paths.out(files::kModeShares));

  csv::Writer tv({"metric", "mode", "total_variation"});
  write_distribution(c, records, DemandMetric::TripTime, c.report.trip_time_edges, c.report.reference_trip_time, tv);
  write_distribution(c, records, DemandMetric::TripLength, c.report.trip_length_edges,
                     c.report.reference_trip_length, tv);
  tv.save(c.paths.out(files::kTotalVariation));
  log().info("report: mode shares over {} trips", shares.total);
}

// ---------------------------------------------------------------- dispatch

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"synth",    "filter", "segment", "features",
                                                 "train",    "evaluate", "impute", "report"};
  return names;
}

inline void run_stage(const std::string& stage, const PipelineConfig& c) {
  try {
    if (stage == "synth") return cmd_synth(c);
    if (stage == "filter") return cmd_filter(c);
    if (stage == "segment") return cmd_segment(c);
    if (stage == "features") return cmd_features(c);
    if (stage == "train") return cmd_train(c);
    if (stage == "evaluate") return cmd_evaluate(c);
    if (stage == "impute") return cmd_impute(c);
    if (stage == "report") return cmd_report(c);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, Error(ErrorKind::Io, e.what()));
  }
  throw Error(ErrorKind::InvalidArgument, "unknown stage '" + stage + "'");
}

/// Every stage in order; `synth` only when enabled in the config.
inline void run_all(const PipelineConfig& c) {
  for (const auto& s : stage_names()) {
    if (s == "synth" && !c.synth.enabled) continue;
    log().info("stage {}", s);
    run_stage(s, c);
  }
}

}  // namespace modeforge::pipeline
