#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "modeforge/classifier.hpp"
#include "modeforge/csv.hpp"
#include "modeforge/error.hpp"

namespace modeforge {

// Model file layout (JSON object):
//   format          "modeforge-model"
//   version         kModelFormatVersion
//   kind            wide_deep | glm | tree | bagging | random_forest
//   class_order     ["Car", "Metro", "Bus", "Walk"]
//   features        selected feature column names, in model input order
//   scaler          {"min": [...], "max": [...]}
//   metadata        training configuration, including the seed
// wide_deep / glm:
//   wide            {"rows", "cols", "weights" (row-major), "bias"}
//   deep            {"layers": [{"rows", "cols", "weights" (row-major), "bias"}]}
//   combine         {"wide": w_wide, "deep": w_deep}
// tree / bagging / random_forest:
//   trees           [{"feature": [...], "threshold": [...], "left": [...],
//                     "right": [...], "counts": [[4 per node]]}]  (feature -1 = leaf)
inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json tensor_json(const Tensor& t) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(t.size()));
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(t(r, c));
  }
  return {{"rows", t.rows()}, {"cols", t.cols()}, {"weights", data}};
}

inline std::vector<double> bias_vector(const Tensor& b) {
  return std::vector<double>(b.data(), b.data() + b.size());
}

inline Tensor tensor_from(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("weights").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw Error(ErrorKind::Parse, "tensor shape does not match its data");
  }
  Tensor t(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return t;
}

inline Tensor column_from(const nlohmann::json& j, Eigen::Index expected) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != expected) {
    throw Error(ErrorKind::Parse, "bias length does not match its layer");
  }
  Tensor t(expected, 1);
  for (Eigen::Index i = 0; i < expected; ++i) t(i, 0) = v[static_cast<std::size_t>(i)];
  return t;
}

inline nlohmann::json train_config_json(const TrainConfig& c) {
  nlohmann::json j = {{"optimizer", to_string(c.optimizer)},
                      {"learning_rate", c.effective_learning_rate()},
                      {"epochs", c.epochs},
                      {"batch_size", c.batch_size},
                      {"seed", c.seed},
                      {"rmsprop_decay", c.rmsprop_decay},
                      {"adam_beta1", c.adam_beta1},
                      {"adam_beta2", c.adam_beta2},
                      {"epsilon", c.epsilon},
                      {"hidden", c.hidden},
                      {"deep_enabled", c.deep_enabled},
                      {"learn_combine_weights", c.learn_combine_weights},
                      {"class_weights", c.class_weights}};
  return j;
}

inline TrainConfig train_config_from(const nlohmann::json& j) {
  TrainConfig c;
  c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.rmsprop_decay = j.at("rmsprop_decay").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.deep_enabled = j.at("deep_enabled").get<bool>();
  c.learn_combine_weights = j.at("learn_combine_weights").get<bool>();
  c.class_weights = j.at("class_weights").get<std::array<double, kNumModes>>();
  return c;
}

inline nlohmann::json forest_config_json(const ForestConfig& c) {
  return {{"n_trees", c.n_trees},         {"bootstrap", c.bootstrap},
          {"random_features", c.random_features}, {"max_features", c.max_features},
          {"max_depth", c.tree.max_depth}, {"min_samples_leaf", c.tree.min_samples_leaf},
          {"seed", c.seed}};
}

inline ForestConfig forest_config_from(const nlohmann::json& j) {
  ForestConfig c;
  c.n_trees = j.at("n_trees").get<std::size_t>();
  c.bootstrap = j.at("bootstrap").get<bool>();
  c.random_features = j.at("random_features").get<bool>();
  c.max_features = j.at("max_features").get<std::size_t>();
  c.tree.max_depth = j.at("max_depth").get<std::size_t>();
  c.tree.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline FeatureSelection selection_from_names(const std::vector<std::string>& names) {
  FeatureSelection sel = FeatureSelection::trajectory_only();
  for (const auto& n : names) {
    if (n == kFeatureNames[static_cast<std::size_t>(Feature::AvgDistRail)]) sel.rail = true;
    if (n == kFeatureNames[static_cast<std::size_t>(Feature::AvgDistBus)]) sel.bus = true;
    if (n == kFeatureNames[static_cast<std::size_t>(Feature::AvgDistHighway)]) sel.highway = true;
  }
  if (sel.names() != names) throw Error(ErrorKind::Parse, "unsupported feature list in model file");
  return sel;
}

}  // namespace detail

inline std::string model_to_json(const Classifier& model) {
  nlohmann::json j;
  j["format"] = "modeforge-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(model.kind());
  std::vector<std::string> classes;
  for (auto m : kModes) classes.emplace_back(to_string(m));
  j["class_order"] = classes;
  j["features"] = model.selection().names();
  j["scaler"] = {{"min", model.scaler().min()}, {"max", model.scaler().max()}};
  if (model.is_network()) {
    const auto& m = model.network();
    j["metadata"] = detail::train_config_json(m.config);
    auto wide = detail::tensor_json(m.params.wide.weights);
    wide["bias"] = detail::bias_vector(m.params.wide.bias);
    j["wide"] = wide;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.params.deep.layers) {
      auto lj = detail::tensor_json(l.weights);
      lj["bias"] = detail::bias_vector(l.bias);
      layers.push_back(lj);
    }
    j["deep"] = {{"layers", layers}};
    j["combine"] = {{"wide", m.params.w_wide()}, {"deep", m.params.w_deep()}};
  } else {
    const auto& f = model.forest();
    j["metadata"] = detail::forest_config_json(f.config);
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : f.trees) {
      std::vector<long long> feature;
      std::vector<double> threshold;
      std::vector<std::uint32_t> left, right;
      std::vector<std::array<double, kNumModes>> counts;
      for (const auto& n : t.nodes()) {
        feature.push_back(n.is_leaf() ? -1 : static_cast<long long>(n.feature));
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        counts.push_back(n.counts);
      }
      trees.push_back({{"feature", feature},
                       {"threshold", threshold},
                       {"left", left},
                       {"right", right},
                       {"counts", counts}});
    }
    j["trees"] = trees;
  }
  return j.dump(1) + "\n";
}

inline Classifier model_from_json(const std::string& text, const std::string& source = "<memory>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, source + ": " + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", std::string()) != "modeforge-model") {
      throw Error(ErrorKind::Parse, source + ": not a modeforge model file");
    }
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::Version, source + ": unsupported model version " +
                                          (j.contains("version") ? j["version"].dump() : "<missing>") +
                                          ", expected " + std::to_string(kModelFormatVersion));
    }
    std::vector<std::string> classes;
    for (auto m : kModes) classes.emplace_back(to_string(m));
    if (j.at("class_order").get<std::vector<std::string>>() != classes) {
      throw Error(ErrorKind::Parse, source + ": unexpected class order");
    }
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    const auto selection = detail::selection_from_names(j.at("features").get<std::vector<std::string>>());
    FeatureScaler scaler(j.at("scaler").at("min").get<std::vector<double>>(),
                         j.at("scaler").at("max").get<std::vector<double>>());
    if (scaler.dimension() != selection.columns().size()) {
      throw Error(ErrorKind::Parse, source + ": scaler dimension does not match feature list");
    }

    if (kind == ModelKind::WideDeep || kind == ModelKind::Glm) {
      WideDeepModel m;
      m.selection = selection;
      m.scaler = std::move(scaler);
      m.config = detail::train_config_from(j.at("metadata"));
      m.params.wide.weights = detail::tensor_from(j.at("wide"));
      if (m.params.wide.weights.rows() != static_cast<Eigen::Index>(kNumModes) ||
          static_cast<std::size_t>(m.params.wide.weights.cols()) != m.scaler.dimension()) {
        throw Error(ErrorKind::Parse, source + ": wide weights have the wrong shape");
      }
      m.params.wide.bias = detail::column_from(j.at("wide").at("bias"), kNumModes);
      Eigen::Index in = m.params.wide.weights.cols();
      for (const auto& lj : j.at("deep").at("layers")) {
        DenseLayer l;
        l.weights = detail::tensor_from(lj);
        if (l.weights.cols() != in) throw Error(ErrorKind::Parse, source + ": deep layers do not compose");
        l.bias = detail::column_from(lj.at("bias"), l.weights.rows());
        in = l.weights.rows();
        m.params.deep.layers.push_back(std::move(l));
      }
      if (!m.params.deep.layers.empty() && in != static_cast<Eigen::Index>(kNumModes)) {
        throw Error(ErrorKind::Parse, source + ": deep output width must equal the class count");
      }
      m.params.combine(0, 0) = j.at("combine").at("wide").get<double>();
      m.params.combine(1, 0) = j.at("combine").at("deep").get<double>();
      return {kind, std::move(m)};
    }

    ForestModel f;
    f.selection = selection;
    f.scaler = std::move(scaler);
    f.config = detail::forest_config_from(j.at("metadata"));
    for (const auto& tj : j.at("trees")) {
      const auto feature = tj.at("feature").get<std::vector<long long>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto left = tj.at("left").get<std::vector<std::uint32_t>>();
      const auto right = tj.at("right").get<std::vector<std::uint32_t>>();
      const auto counts = tj.at("counts").get<std::vector<std::array<double, kNumModes>>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n || n == 0) {
        throw Error(ErrorKind::Parse, source + ": tree arrays disagree in length");
      }
      std::vector<TreeNode> nodes(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (feature[i] >= 0) {
          if (static_cast<std::size_t>(feature[i]) >= f.scaler.dimension() || left[i] >= n ||
              right[i] >= n || left[i] <= i || right[i] <= i) {
            throw Error(ErrorKind::Parse, source + ": malformed tree node " + std::to_string(i));
          }
          nodes[i].feature = static_cast<std::uint32_t>(feature[i]);
        }
        nodes[i].threshold = threshold[i];
        nodes[i].left = left[i];
        nodes[i].right = right[i];
        nodes[i].counts = counts[i];
      }
      f.trees.emplace_back(std::move(nodes));
    }
    if (f.trees.empty()) throw Error(ErrorKind::Parse, source + ": forest without trees");
    return {kind, std::move(f)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, source + ": " + e.what());
  }
}

inline void save_model(const Classifier& model, const std::filesystem::path& path) {
  csv::Writer::write_atomically(path, model_to_json(model));
}

inline Classifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), path.string());
}

}  // namespace modeforge
