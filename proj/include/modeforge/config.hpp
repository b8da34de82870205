#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "modeforge/classifier.hpp"
#include "modeforge/corpus.hpp"
#include "modeforge/demand.hpp"
#include "modeforge/evaluation.hpp"
#include "modeforge/csv.hpp"
#include "modeforge/error.hpp"
#include "modeforge/synthetic.hpp"

namespace modeforge {

// ------------------------------------------------------------------ TOML subset
//
// Supported: [section] headers, `key = value` pairs, # comments, basic
// strings with \" \\ \n \t escapes, integers/floats, true/false, and arrays
// of scalars (which may span lines). Dotted keys, tables-of-tables and
// dates are not supported.

namespace toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, bool, std::string, Array> v;
  std::size_t line = 0;
};

struct Entry {
  Value value;
  bool used = false;
};

class Document {
 public:
  static Document parse(const std::string& text, const std::string& source) {
    Document d;
    d.source_ = source;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::size_t first_line = line_no;
      std::string line = strip_comment(raw);
      // arrays may continue over several lines
      while (bracket_depth(line) > 0 && std::getline(in, raw)) {
        ++line_no;
        line += " " + strip_comment(raw);
      }
      line = csv::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) throw d.error(first_line, "malformed section header");
        section = csv::trim(line.substr(1, line.size() - 2));
        if (section.empty() || section.find_first_of("[]. \"") != std::string::npos) {
          throw d.error(first_line, "unsupported section name '" + section + "'");
        }
        if (!d.sections_.emplace(section, std::map<std::string, Entry>{}).second) {
          throw d.error(first_line, "duplicate section [" + section + "]");
        }
        d.section_line_[section] = first_line;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw d.error(first_line, "expected key = value");
      const std::string key = csv::trim(line.substr(0, eq));
      if (key.empty() || key.find_first_of(" .\"[]") != std::string::npos) {
        throw d.error(first_line, "unsupported key '" + key + "'");
      }
      if (section.empty()) throw d.error(first_line, "key '" + key + "' outside any section");
      std::size_t pos = 0;
      const std::string rhs = csv::trim(line.substr(eq + 1));
      Value v = d.parse_value(rhs, pos, first_line);
      skip_ws(rhs, pos);
      if (pos != rhs.size()) throw d.error(first_line, "trailing characters after value of '" + key + "'");
      auto& sec = d.sections_[section];
      if (!sec.emplace(key, Entry{std::move(v), false}).second) {
        throw d.error(first_line, "duplicate key '" + section + "." + key + "'");
      }
    }
    return d;
  }

  const std::string& source() const { return source_; }
  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

  Entry* find(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }

  /// Throws on the first section or key that no binder consumed.
  void reject_unknown(const std::set<std::string>& known_sections) const {
    for (const auto& [name, keys] : sections_) {
      if (!known_sections.count(name)) {
        throw error(section_line_.at(name), "unknown section [" + name + "]");
      }
      for (const auto& [key, entry] : keys) {
        if (!entry.used) throw error(entry.value.line, "unknown key '" + name + "." + key + "'");
      }
    }
  }

  Error error(std::size_t line, const std::string& what) const {
    return Error(ErrorKind::Config, source_ + ":" + std::to_string(line) + ": " + what);
  }

 private:
  static std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (in_str && s[i] == '\\') {
        ++i;
      } else if (s[i] == '"') {
        in_str = !in_str;
      } else if (s[i] == '#' && !in_str) {
        return s.substr(0, i);
      }
    }
    return s;
  }

  static int bracket_depth(const std::string& s) {
    int depth = 0;
    bool in_str = false;
    const auto eq = s.find('=');
    if (eq == std::string::npos) return 0;
    for (std::size_t i = eq + 1; i < s.size(); ++i) {
      if (in_str && s[i] == '\\') {
        ++i;
      } else if (s[i] == '"') {
        in_str = !in_str;
      } else if (!in_str && s[i] == '[') {
        ++depth;
      } else if (!in_str && s[i] == ']') {
        --depth;
      }
    }
    return depth;
  }

  static void skip_ws(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }

  Value parse_value(const std::string& s, std::size_t& pos, std::size_t line) const {
    skip_ws(s, pos);
    if (pos >= s.size()) throw error(line, "missing value");
    Value out;
    out.line = line;
    const char c = s[pos];
    if (c == '"') {
      std::string str;
      ++pos;
      while (true) {
        if (pos >= s.size()) throw error(line, "unterminated string");
        const char ch = s[pos++];
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos >= s.size()) throw error(line, "dangling escape");
          const char e = s[pos++];
          switch (e) {
            case '"': str.push_back('"'); break;
            case '\\': str.push_back('\\'); break;
            case 'n': str.push_back('\n'); break;
            case 't': str.push_back('\t'); break;
            default: throw error(line, std::string("unsupported escape \\") + e);
          }
        } else {
          str.push_back(ch);
        }
      }
      out.v = std::move(str);
      return out;
    }
    if (c == '[') {
      ++pos;
      Array arr;
      skip_ws(s, pos);
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        out.v = std::move(arr);
        return out;
      }
      while (true) {
        Value item = parse_value(s, pos, line);
        if (std::holds_alternative<Array>(item.v)) throw error(line, "nested arrays are not supported");
        arr.push_back(std::move(item));
        skip_ws(s, pos);
        if (pos < s.size() && s[pos] == ',') {
          ++pos;
          skip_ws(s, pos);
          if (pos < s.size() && s[pos] == ']') {
            ++pos;
            break;
          }
          continue;
        }
        if (pos < s.size() && s[pos] == ']') {
          ++pos;
          break;
        }
        throw error(line, "expected ',' or ']' in array");
      }
      out.v = std::move(arr);
      return out;
    }
    std::size_t end = pos;
    while (end < s.size() && s[end] != ',' && s[end] != ']' && s[end] != ' ' && s[end] != '\t') ++end;
    std::string token = s.substr(pos, end - pos);
    pos = end;
    if (token == "true" || token == "false") {
      out.v = token == "true";
      return out;
    }
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits.push_back(ch);
    }
    const auto num = csv::to_double(digits);
    if (!num || digits.empty()) throw error(line, "cannot parse value '" + token + "'");
    out.v = *num;
    return out;
  }

  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::size_t> section_line_;
};

/// Typed accessors over one section; absent keys leave the target untouched.
class Section {
 public:
  Section(Document& doc, std::string name) : doc_(doc), name_(std::move(name)) {}

  void get(const std::string& key, double& out) {
    if (auto* e = doc_.find(name_, key)) out = number(*e, key);
  }

  void get(const std::string& key, std::optional<double>& out) {
    if (auto* e = doc_.find(name_, key)) out = number(*e, key);
  }

  void get(const std::string& key, std::size_t& out) {
    if (auto* e = doc_.find(name_, key)) out = count(e->value, key);
  }

  void get(const std::string& key, std::uint64_t& out, int /*tag*/) {
    if (auto* e = doc_.find(name_, key)) out = count(e->value, key);
  }

  void get(const std::string& key, bool& out) {
    if (auto* e = doc_.find(name_, key)) {
      if (!std::holds_alternative<bool>(e->value.v)) throw bad(e->value, key, "a boolean");
      out = std::get<bool>(e->value.v);
    }
  }

  void get(const std::string& key, std::string& out) {
    if (auto* e = doc_.find(name_, key)) {
      if (!std::holds_alternative<std::string>(e->value.v)) throw bad(e->value, key, "a string");
      out = std::get<std::string>(e->value.v);
    }
  }

  void get(const std::string& key, std::optional<std::string>& out) {
    std::string v;
    if (doc_.find(name_, key)) {
      get(key, v);
      out = v;
    }
  }

  void get(const std::string& key, std::vector<double>& out) {
    if (auto* e = doc_.find(name_, key)) {
      out.clear();
      for (const auto& item : array(*e, key)) {
        if (!std::holds_alternative<double>(item.v)) throw bad(item, key, "an array of numbers");
        out.push_back(std::get<double>(item.v));
      }
    }
  }

  void get(const std::string& key, std::vector<std::size_t>& out) {
    if (auto* e = doc_.find(name_, key)) {
      out.clear();
      for (const auto& item : array(*e, key)) out.push_back(count(item, key));
    }
  }

  void get(const std::string& key, std::vector<std::string>& out) {
    if (auto* e = doc_.find(name_, key)) {
      out.clear();
      for (const auto& item : array(*e, key)) {
        if (!std::holds_alternative<std::string>(item.v)) throw bad(item, key, "an array of strings");
        out.push_back(std::get<std::string>(item.v));
      }
    }
  }

  Error error(const std::string& key, const std::string& what) const {
    return Error(ErrorKind::Config, doc_.source() + ": " + name_ + "." + key + ": " + what);
  }

 private:
  Error bad(const Value& v, const std::string& key, const std::string& want) const {
    return doc_.error(v.line, name_ + "." + key + " must be " + want);
  }

  double number(const Entry& e, const std::string& key) const {
    if (!std::holds_alternative<double>(e.value.v)) throw bad(e.value, key, "a number");
    return std::get<double>(e.value.v);
  }

  std::uint64_t count(const Value& v, const std::string& key) const {
    if (!std::holds_alternative<double>(v.v)) throw bad(v, key, "a non-negative integer");
    const double x = std::get<double>(v.v);
    if (!(x >= 0.0) || x != std::floor(x) || x > 9.0e15) throw bad(v, key, "a non-negative integer");
    return static_cast<std::uint64_t>(x);
  }

  const Array& array(const Entry& e, const std::string& key) const {
    if (!std::holds_alternative<Array>(e.value.v)) throw bad(e.value, key, "an array");
    return std::get<Array>(e.value.v);
  }

  Document& doc_;
  std::string name_;
};

}  // namespace toml

// --------------------------------------------------------------- pipeline config

/// One evaluated model: a kind plus its feature selection.
struct ModelVariant {
  std::string name;  // as written in the config, e.g. "wide_deep+net"
  ModelKind kind = ModelKind::WideDeep;
  FeatureSelection selection;
};

/// `kind` alone uses the default selection; `kind+net` / `kind-net` force
/// network features on or off.
inline ModelVariant parse_model_variant(const std::string& s, const FeatureSelection& fallback) {
  ModelVariant v;
  v.name = s;
  std::string base = s;
  v.selection = fallback;
  auto ends_with = [&](const char* suffix) {
    const std::string x = suffix;
    return base.size() > x.size() && base.compare(base.size() - x.size(), x.size(), x) == 0;
  };
  if (ends_with("+net")) {
    base.resize(base.size() - 4);
    v.selection = FeatureSelection{};
  } else if (ends_with("-net")) {
    base.resize(base.size() - 4);
    v.selection = FeatureSelection::trajectory_only();
  }
  v.kind = parse_model_kind(base);
  return v;
}

struct PathsConfig {
  std::filesystem::path points = "data/points.csv";
  std::filesystem::path ground_truth;  // optional; enables label joins
  std::filesystem::path rail = "data/rail.geojson";
  std::filesystem::path bus = "data/bus";
  std::filesystem::path highway = "data/highway.geojson";
  std::filesystem::path output_dir = "out";
  std::filesystem::path model;  // defaults to <output_dir>/model.json

  std::filesystem::path out(const std::string& name) const { return output_dir / name; }
  std::filesystem::path model_path() const { return model.empty() ? out("model.json") : model; }
};

struct FeaturesConfig {
  FeatureSelection selection;
  double grid_cell = ModalNetwork::kDefaultCellSize;
  double label_min_overlap = 0.5;
};

struct EvaluateConfig {
  CvConfig cv;
  std::vector<std::string> models = {"wide_deep+net", "wide_deep-net", "random_forest+net", "random_forest-net"};
};

struct ReportConfig {
  std::vector<double> trip_time_edges = {0, 300, 600, 900, 1200, 1800, 2700, 3600, 5400};
  std::vector<double> trip_length_edges = {0, 1000, 2000, 5000, 10000, 20000, 40000};
  std::filesystem::path reference_trip_time;
  std::filesystem::path reference_trip_length;
};

struct SynthConfig {
  bool enabled = false;  // whether `run` regenerates corpus and networks first
  SyntheticSpec spec;
  SyntheticArea area;
};

struct PipelineConfig {
  std::filesystem::path source;
  PathsConfig paths;
  ExtractionConfig extraction;
  FeaturesConfig features;
  ModelSpec model;
  EvaluateConfig evaluate;
  ReportConfig report;
  SynthConfig synth;
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  /// Pushes the global seed and thread count into every stage.
  void apply_globals() {
    model.network.seed = seed;
    model.forest.seed = seed;
    evaluate.cv.base_seed = seed;
    evaluate.cv.threads = threads;
    synth.spec.seed = seed;
  }

  void validate() const {
    extraction.filter.validate();
    extraction.stay.validate();
    extraction.split.validate();
    model.network.validate();
    synth.spec.validate();
    if (!(features.grid_cell > 0.0)) throw Error(ErrorKind::Config, "features.grid_cell must be > 0");
    if (!(features.label_min_overlap > 0.0 && features.label_min_overlap <= 1.0)) {
      throw Error(ErrorKind::Config, "features.label_min_overlap must be in (0, 1]");
    }
    if (model.forest.n_trees < 1) throw Error(ErrorKind::Config, "train.n_trees must be >= 1");
    if (evaluate.cv.folds < 2) throw Error(ErrorKind::Config, "evaluate.folds must be >= 2");
    if (evaluate.cv.seeds < 1) throw Error(ErrorKind::Config, "evaluate.seeds must be >= 1");
    if (!(evaluate.cv.subsample_fraction > 0.0 && evaluate.cv.subsample_fraction <= 1.0)) {
      throw Error(ErrorKind::Config, "evaluate.subsample_fraction must be in (0, 1]");
    }
    if (evaluate.models.empty()) throw Error(ErrorKind::Config, "evaluate.models is empty");
    for (const auto& m : evaluate.models) parse_model_variant(m, features.selection);
    for (auto [key, edges] : {std::pair{"report.trip_time_edges", &report.trip_time_edges},
                              std::pair{"report.trip_length_edges", &report.trip_length_edges}}) {
      try {
        BinEdges{*edges};
      } catch (const Error& err) {
        throw Error(ErrorKind::Config, std::string(key) + ": " + err.what());
      }
    }
    if (threads < 1) throw Error(ErrorKind::Config, "threads must be >= 1");
  }
};

inline PipelineConfig parse_config(const std::string& text, const std::string& source,
                                   const std::filesystem::path& base_dir) {
  auto doc = toml::Document::parse(text, source);
  PipelineConfig c;
  c.source = source;
  auto path_key = [&](toml::Section& s, const std::string& key, std::filesystem::path& out) {
    std::optional<std::string> v;
    s.get(key, v);
    if (!v) return;
    if (v->empty()) {
      out.clear();
    } else {
      out = std::filesystem::path(*v).is_absolute() ? std::filesystem::path(*v) : base_dir / *v;
    }
  };

  {
    toml::Section s(doc, "paths");
    for (auto [key, target] : std::initializer_list<std::pair<const char*, std::filesystem::path*>>{
             {"points", &c.paths.points},
             {"ground_truth", &c.paths.ground_truth},
             {"rail", &c.paths.rail},
             {"bus", &c.paths.bus},
             {"highway", &c.paths.highway},
             {"output_dir", &c.paths.output_dir},
             {"model", &c.paths.model}}) {
      if (target->is_relative() && !target->empty()) *target = base_dir / *target;
      path_key(s, key, *target);
    }
  }
  {
    toml::Section s(doc, "filter");
    s.get("min_accuracy", c.extraction.filter.min_accuracy);
    s.get("max_jump_speed", c.extraction.filter.max_jump_speed);
  }
  {
    toml::Section s(doc, "segment");
    std::string method = to_string(c.extraction.method);
    s.get("method", method);
    c.extraction.method = parse_segment_method(method);
    s.get("max_roam_distance", c.extraction.stay.max_roam_distance);
    s.get("min_dwell_time", c.extraction.stay.min_dwell_time);
    s.get("max_speed", c.extraction.stay.max_speed);
    s.get("max_distance_from", c.extraction.split.max_distance_from);
    s.get("max_speed_from", c.extraction.split.max_speed_from);
    s.get("max_time_from", c.extraction.split.max_time_from);
  }
  {
    toml::Section s(doc, "features");
    s.get("rail", c.features.selection.rail);
    s.get("bus", c.features.selection.bus);
    s.get("highway", c.features.selection.highway);
    s.get("grid_cell", c.features.grid_cell);
    s.get("label_min_overlap", c.features.label_min_overlap);
    c.model.selection = c.features.selection;
  }
  {
    toml::Section s(doc, "train");
    auto& n = c.model.network;
    std::string kind = to_string(c.model.kind);
    s.get("model", kind);
    c.model.kind = parse_model_kind(kind);
    std::string opt = to_string(n.optimizer);
    s.get("optimizer", opt);
    n.optimizer = parse_optimizer(opt);
    s.get("learning_rate", n.learning_rate);
    s.get("epochs", n.epochs);
    s.get("batch_size", n.batch_size);
    s.get("hidden", n.hidden);
    s.get("rmsprop_decay", n.rmsprop_decay);
    s.get("adam_beta1", n.adam_beta1);
    s.get("adam_beta2", n.adam_beta2);
    s.get("epsilon", n.epsilon);
    s.get("learn_combine_weights", n.learn_combine_weights);
    std::vector<double> cw(n.class_weights.begin(), n.class_weights.end());
    s.get("class_weights", cw);
    if (cw.size() != kNumModes) throw s.error("class_weights", "needs exactly 4 entries");
    std::copy(cw.begin(), cw.end(), n.class_weights.begin());
    auto& f = c.model.forest;
    s.get("n_trees", f.n_trees);
    s.get("bootstrap", f.bootstrap);
    s.get("max_features", f.max_features);
    s.get("max_depth", f.tree.max_depth);
    s.get("min_samples_leaf", f.tree.min_samples_leaf);
  }
  {
    toml::Section s(doc, "evaluate");
    s.get("folds", c.evaluate.cv.folds);
    s.get("seeds", c.evaluate.cv.seeds);
    s.get("subsample_fraction", c.evaluate.cv.subsample_fraction);
    s.get("models", c.evaluate.models);
  }
  {
    toml::Section s(doc, "report");
    s.get("trip_time_edges", c.report.trip_time_edges);
    s.get("trip_length_edges", c.report.trip_length_edges);
    path_key(s, "reference_trip_time", c.report.reference_trip_time);
    path_key(s, "reference_trip_length", c.report.reference_trip_length);
  }
  {
    toml::Section s(doc, "synth");
    auto& sp = c.synth.spec;
    s.get("enabled", c.synth.enabled);
    s.get("trips", sp.total_trips);
    std::vector<double> mix(sp.mode_mix.begin(), sp.mode_mix.end());
    s.get("mode_mix", mix);
    if (mix.size() != kNumModes) throw s.error("mode_mix", "needs exactly 4 entries (car, metro, bus, walk)");
    std::copy(mix.begin(), mix.end(), sp.mode_mix.begin());
    std::vector<std::size_t> counts;
    s.get("counts", counts);
    if (!counts.empty()) {
      if (counts.size() != kNumModes) throw s.error("counts", "needs exactly 4 entries (car, metro, bus, walk)");
      sp.counts = std::array<std::size_t, kNumModes>{counts[0], counts[1], counts[2], counts[3]};
    }
    s.get("metro_dropout", sp.metro_dropout);
    s.get("gps_sigma", sp.gps_sigma);
    s.get("lateral_sigma", sp.lateral_sigma);
    s.get("moving_interval", sp.moving_interval);
    s.get("trips_per_device", sp.trips_per_device);
    s.get("low_accuracy_rate", sp.low_accuracy_rate);
    s.get("jump_rate", sp.jump_rate);
    s.get("car_on_bus_roads", sp.car_on_bus_roads);
    s.get("bus_on_highway", sp.bus_on_highway);
    s.get("emit_speed", sp.emit_speed);
    s.get("emit_accuracy", sp.emit_accuracy);
    s.get("network_seed", c.synth.area.seed, 0);
  }
  {
    toml::Section s(doc, "global");
    s.get("seed", c.seed, 0);
    s.get("threads", c.threads);
  }
  doc.reject_unknown({"paths", "filter", "segment", "features", "train", "evaluate", "report", "synth", "global"});
  c.apply_globals();
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path());
}

}  // namespace modeforge
