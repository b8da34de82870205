#pragma once

#include <string>
#include <variant>
#include <vector>

#include "modeforge/baselines.hpp"
#include "modeforge/dataset.hpp"
#include "modeforge/wide_deep.hpp"

namespace modeforge {

enum class ModelKind { WideDeep, Glm, Tree, Bagging, RandomForest };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::WideDeep: return "wide_deep";
    case ModelKind::Glm: return "glm";
    case ModelKind::Tree: return "tree";
    case ModelKind::Bagging: return "bagging";
    case ModelKind::RandomForest: return "random_forest";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "wide_deep") return ModelKind::WideDeep;
  if (s == "glm") return ModelKind::Glm;
  if (s == "tree") return ModelKind::Tree;
  if (s == "bagging") return ModelKind::Bagging;
  if (s == "random_forest") return ModelKind::RandomForest;
  throw Error(ErrorKind::Config, "unknown model kind '" + s + "'");
}

/// Everything needed to fit one model on a training split.
struct ModelSpec {
  ModelKind kind = ModelKind::WideDeep;
  FeatureSelection selection;
  TrainConfig network;
  ForestConfig forest;
};

/// A fitted model of any kind; predictions take raw selected-feature rows.
class Classifier {
 public:
  Classifier() = default;
  Classifier(ModelKind kind, WideDeepModel m) : kind_(kind), model_(std::move(m)) {}
  Classifier(ModelKind kind, ForestModel m) : kind_(kind), model_(std::move(m)) {}

  ModelKind kind() const { return kind_; }
  bool is_network() const { return std::holds_alternative<WideDeepModel>(model_); }
  const WideDeepModel& network() const { return std::get<WideDeepModel>(model_); }
  const ForestModel& forest() const { return std::get<ForestModel>(model_); }

  const FeatureSelection& selection() const {
    return is_network() ? network().selection : forest().selection;
  }
  const FeatureScaler& scaler() const { return is_network() ? network().scaler : forest().scaler; }

  struct Prediction {
    std::vector<std::size_t> labels;
    Eigen::MatrixXd probabilities;  // rows x kNumModes
  };

  /// Labels are the probability argmax for network models and the majority
  /// vote for tree ensembles.
  Prediction predict(const Matrix& raw) const {
    Prediction out;
    out.probabilities.resize(raw.rows(), static_cast<Eigen::Index>(kNumModes));
    out.labels.resize(static_cast<std::size_t>(raw.rows()));
    if (is_network()) {
      out.probabilities = network().predict_proba(raw);
      for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        out.labels[static_cast<std::size_t>(i)] = argmax(out.probabilities.row(i).transpose());
      }
    } else {
      const Matrix x = apply_scaler(forest().scaler, raw);
      for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const auto row = x.row(i);
        out.labels[static_cast<std::size_t>(i)] = forest().predict_normalized(row);
        const auto p = forest().proba_normalized(row);
        for (std::size_t k = 0; k < kNumModes; ++k) {
          out.probabilities(i, static_cast<Eigen::Index>(k)) = p[k];
        }
      }
    }
    return out;
  }

  Prediction predict(const std::vector<FeatureVector>& rows) const {
    return predict(make_dataset(rows, selection(), false).x);
  }

 private:
  ModelKind kind_ = ModelKind::WideDeep;
  std::variant<WideDeepModel, ForestModel> model_;
};

inline Classifier fit_classifier(const Dataset& raw_train, const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::WideDeep:
      return {spec.kind, train_wide_deep(raw_train, spec.selection, spec.network)};
    case ModelKind::Glm:
      return {spec.kind, train_glm(raw_train, spec.selection, spec.network)};
    case ModelKind::Tree:
      return {spec.kind, train_single_tree(raw_train, spec.selection, spec.forest)};
    case ModelKind::Bagging:
      return {spec.kind, train_bagging(raw_train, spec.selection, spec.forest)};
    case ModelKind::RandomForest:
      return {spec.kind, train_random_forest(raw_train, spec.selection, spec.forest)};
  }
  throw Error(ErrorKind::Config, "unhandled model kind");
}

}  // namespace modeforge
