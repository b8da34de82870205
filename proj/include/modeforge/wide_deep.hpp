#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modeforge/dataset.hpp"
#include "modeforge/error.hpp"
#include "modeforge/features.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/optimizers.hpp"
#include "modeforge/rng.hpp"

namespace modeforge {

/// Lower clamp on the true-class probability inside the log loss.
inline constexpr double kProbabilityFloor = 1e-12;

/// Multinomial-logit component: one weight row and one bias per class.
struct WideParams {
  Tensor weights;  // kNumModes x d
  Tensor bias;     // kNumModes x 1

  static WideParams zeros(std::size_t d) {
    return {Tensor::Zero(kNumModes, static_cast<Eigen::Index>(d)), Tensor::Zero(kNumModes, 1)};
  }
  std::size_t dimension() const { return static_cast<std::size_t>(weights.cols()); }
};

struct DenseLayer {
  Tensor weights;  // out x in
  Tensor bias;     // out x 1
};

/// RELU hidden layers followed by a linear projection to kNumModes scores.
struct DeepParams {
  std::vector<DenseLayer> layers;

  bool empty() const { return layers.empty(); }
  std::size_t input_dimension() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
  }
  std::vector<std::size_t> hidden_widths() const {
    std::vector<std::size_t> w;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      w.push_back(static_cast<std::size_t>(layers[l].weights.rows()));
    }
    return w;
  }
};

/// Everything updated by back-propagation. `combine` holds (w_wide, w_deep)
/// as a 2x1 tensor so the optimizers treat it like any other parameter.
struct JointParams {
  WideParams wide;
  DeepParams deep;
  Tensor combine = (Tensor(2, 1) << 1.0, 1.0).finished();

  double w_wide() const { return combine(0, 0); }
  double w_deep() const { return combine(1, 0); }
  bool has_deep() const { return !deep.empty(); }

  /// Fixed order: wide weights, wide bias, (W, b) per deep layer, combine.
  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> t{&wide.weights, &wide.bias};
    for (auto& l : deep.layers) {
      t.push_back(&l.weights);
      t.push_back(&l.bias);
    }
    t.push_back(&combine);
    return t;
  }

  std::vector<const Tensor*> tensors() const {
    auto t = const_cast<JointParams*>(this)->tensors();
    return {t.begin(), t.end()};
  }

  JointParams zeros_like() const {
    JointParams z = *this;
    for (auto* t : z.tensors()) t->setZero();
    return z;
  }
};

inline Vector softmax(const Vector& z) {
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

inline void check_dimension(Eigen::Index got, std::size_t want, const char* what) {
  if (static_cast<std::size_t>(got) != want) {
    throw Error(ErrorKind::Dimension, std::string(what) + ": input has " + std::to_string(got) +
                                          " features, model expects " + std::to_string(want));
  }
}

/// Per-class linear scores beta_y . x + b_y.
inline Vector wide_logits(const Vector& x, const WideParams& wide) {
  check_dimension(x.size(), wide.dimension(), "wide_logits");
  return wide.weights * x + wide.bias.col(0);
}

struct DeepForward {
  Vector scores;
  /// activations[0] is the input; activations[l] the output of hidden layer l.
  std::vector<Vector> activations;
};

inline DeepForward deep_forward(const Vector& x, const DeepParams& deep) {
  if (deep.empty()) throw Error(ErrorKind::Dimension, "deep component has no layers");
  check_dimension(x.size(), deep.input_dimension(), "deep_forward");
  DeepForward out;
  out.activations.push_back(x);
  for (std::size_t l = 0; l < deep.layers.size(); ++l) {
    const auto& layer = deep.layers[l];
    if (layer.weights.cols() != out.activations.back().size()) {
      throw Error(ErrorKind::Dimension, "deep layer " + std::to_string(l) + " does not compose");
    }
    Vector z = layer.weights * out.activations.back() + layer.bias.col(0);
    const bool last = l + 1 == deep.layers.size();
    if (!last) z = z.cwiseMax(0.0);
    if (!z.allFinite()) {
      throw Error(ErrorKind::Numeric, "numeric overflow in deep layer " + std::to_string(l));
    }
    if (last) {
      out.scores = std::move(z);
    } else {
      out.activations.push_back(std::move(z));
    }
  }
  return out;
}

/// Per-class combined logits w_wide * wide + w_deep * deep.
inline Vector joint_logits(const Vector& x, const JointParams& p) {
  Vector z = p.w_wide() * wide_logits(x, p.wide);
  if (p.has_deep()) z += p.w_deep() * deep_forward(x, p.deep).scores;
  return z;
}

inline Vector joint_predict(const Vector& x, const JointParams& p) {
  return softmax(joint_logits(x, p));
}

inline double cross_entropy(const Vector& probabilities, std::size_t label) {
  return -std::log(std::max(probabilities(static_cast<Eigen::Index>(label)), kProbabilityFloor));
}

struct LossTotals {
  double total = 0.0;
  double average = 0.0;
  std::size_t count = 0;
};

inline LossTotals summarize_losses(const std::vector<double>& per_sample) {
  LossTotals t;
  for (double l : per_sample) t.total += l;
  t.count = per_sample.size();
  t.average = t.count ? t.total / static_cast<double>(t.count) : 0.0;
  return t;
}

struct LossAndGradient {
  double loss = 0.0;
  JointParams gradient;
};

/// Mean (class-weighted) cross-entropy of a batch of normalized rows and its
/// gradient with respect to every tensor of `p`.
inline LossAndGradient joint_loss_and_gradient(const JointParams& p, const Eigen::MatrixXd& x,
                                               const std::vector<std::size_t>& y,
                                               const std::array<double, kNumModes>& class_weights = {
                                                   1.0, 1.0, 1.0, 1.0}) {
  const Eigen::Index b = x.rows();
  if (b == 0 || static_cast<std::size_t>(b) != y.size()) {
    throw Error(ErrorKind::Dimension, "batch rows and labels disagree");
  }
  check_dimension(x.cols(), p.wide.dimension(), "joint_loss");

  Eigen::MatrixXd zw = x * p.wide.weights.transpose();
  zw.rowwise() += p.wide.bias.col(0).transpose();
  Eigen::MatrixXd z = p.w_wide() * zw;

  std::vector<Eigen::MatrixXd> acts;
  Eigen::MatrixXd sd;
  if (p.has_deep()) {
    check_dimension(x.cols(), p.deep.input_dimension(), "joint_loss");
    acts.reserve(p.deep.layers.size());
    acts.push_back(x);
    for (std::size_t l = 0; l < p.deep.layers.size(); ++l) {
      const auto& layer = p.deep.layers[l];
      Eigen::MatrixXd h = acts.back() * layer.weights.transpose();
      h.rowwise() += layer.bias.col(0).transpose();
      if (l + 1 < p.deep.layers.size()) {
        acts.push_back(h.cwiseMax(0.0));
      } else {
        sd = std::move(h);
      }
    }
    z += p.w_deep() * sd;
  }

  // softmax per row, then d(loss)/dz = w_i (p - onehot) / B
  Eigen::MatrixXd g = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  g.array().colwise() /= g.rowwise().sum().array();
  LossAndGradient out;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto c = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
    const double w = class_weights[static_cast<std::size_t>(c)];
    loss += w * -std::log(std::max(g(i, c), kProbabilityFloor));
    g(i, c) -= 1.0;
    g.row(i) *= w / static_cast<double>(b);
  }
  out.loss = loss / static_cast<double>(b);

  JointParams& grad = out.gradient;
  grad.combine = Tensor::Zero(2, 1);
  grad.combine(0, 0) = (g.array() * zw.array()).sum();

  const Eigen::MatrixXd gw = p.w_wide() * g;
  grad.wide.weights = gw.transpose() * x;
  grad.wide.bias = gw.colwise().sum().transpose();

  if (p.has_deep()) {
    grad.combine(1, 0) = (g.array() * sd.array()).sum();
    grad.deep.layers.resize(p.deep.layers.size());
    Eigen::MatrixXd gd = p.w_deep() * g;
    for (std::size_t l = p.deep.layers.size(); l-- > 0;) {
      const Eigen::MatrixXd& input = acts[l];
      grad.deep.layers[l].weights = gd.transpose() * input;
      grad.deep.layers[l].bias = gd.colwise().sum().transpose();
      if (l > 0) {
        Eigen::MatrixXd back = gd * p.deep.layers[l].weights;
        gd = (input.array() > 0.0).select(back, 0.0);
      }
    }
  }
  return out;
}

inline double joint_loss(const JointParams& p, const Eigen::MatrixXd& x,
                         const std::vector<std::size_t>& y) {
  return joint_loss_and_gradient(p, x, y).loss;
}

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::RMSProp;
  std::optional<double> learning_rate;  // per-optimizer default when unset
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
  double rmsprop_decay = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::size_t> hidden = {400, 100, 50};
  bool deep_enabled = true;
  bool learn_combine_weights = true;
  double init_w_wide = 1.0;
  double init_w_deep = 1.0;
  std::array<double, kNumModes> class_weights = {1.0, 1.0, 1.0, 1.0};

  double effective_learning_rate() const {
    if (learning_rate) return *learning_rate;
    return optimizer == OptimizerKind::Adam ? 0.001 : 0.01;
  }

  OptimizerConfig optimizer_config() const {
    return {optimizer, effective_learning_rate(), rmsprop_decay, adam_beta1, adam_beta2, epsilon};
  }

  void validate() const {
    const double lr = effective_learning_rate();
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::Config, "learning_rate must be > 0");
    if (epochs < 1) throw Error(ErrorKind::Config, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorKind::Config, "batch_size must be >= 1");
    if (deep_enabled && hidden.empty()) {
      throw Error(ErrorKind::Config, "deep component needs at least one hidden layer");
    }
    for (auto w : hidden) {
      if (w == 0) throw Error(ErrorKind::Config, "hidden widths must be positive");
    }
    for (double w : class_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorKind::Config, "class weights must be > 0");
    }
  }
};

/// He-uniform hidden weights, Glorot-uniform output projection, zero wide
/// weights and biases.
inline JointParams initialize_params(std::size_t d, const TrainConfig& cfg) {
  JointParams p;
  p.wide = WideParams::zeros(d);
  p.combine(0, 0) = cfg.init_w_wide;
  p.combine(1, 0) = cfg.deep_enabled ? cfg.init_w_deep : 0.0;
  if (!cfg.deep_enabled) return p;
  Rng rng(derive_seed(cfg.seed, 1));
  std::size_t in = d;
  auto widths = cfg.hidden;
  widths.push_back(kNumModes);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::size_t out = widths[l];
    const bool last = l + 1 == widths.size();
    const double limit = last ? std::sqrt(6.0 / static_cast<double>(in + out))
                              : std::sqrt(6.0 / static_cast<double>(in));
    DenseLayer layer{Tensor(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                     Tensor::Zero(static_cast<Eigen::Index>(out), 1)};
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = rng.uniform(-limit, limit);
      }
    }
    p.deep.layers.push_back(std::move(layer));
    in = out;
  }
  return p;
}

/// Trained joint classifier bound to its feature selection and scaler.
struct WideDeepModel {
  JointParams params;
  FeatureScaler scaler;
  FeatureSelection selection;
  TrainConfig config;
  /// Mean training loss per epoch (not serialized).
  std::vector<double> history;

  bool is_glm() const { return !params.has_deep(); }

  /// Probabilities for an already normalized, already selected row.
  Vector predict_normalized(const Vector& x) const { return joint_predict(x, params); }

  /// Probabilities for a raw selected-feature row.
  Vector predict_raw(const std::vector<double>& raw) const {
    const auto n = scaler.apply(raw);
    return predict_normalized(Eigen::Map<const Vector>(n.data(), static_cast<Eigen::Index>(n.size())));
  }

  Vector predict(const FeatureVector& fv) const {
    return predict_raw(select(fv.raw, selection.columns()));
  }

  /// One probability row per raw selected-feature row.
  Eigen::MatrixXd predict_proba(const Matrix& raw) const {
    Eigen::MatrixXd out(raw.rows(), static_cast<Eigen::Index>(kNumModes));
    const Matrix x = apply_scaler(scaler, raw);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      out.row(i) = predict_normalized(x.row(i).transpose()).transpose();
    }
    return out;
  }
};

inline std::size_t argmax(const Vector& p) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    if (p(i) > p(best)) best = i;
  }
  return static_cast<std::size_t>(best);
}

/// Fits the scaler on `train` (raw selected columns) and jointly trains the
/// wide and deep components with mini-batch back-propagation. Deterministic
/// for a given (data, config). Initialization and shuffling draw from
/// separate seeded streams.
inline WideDeepModel train_wide_deep(const Dataset& train, const FeatureSelection& selection,
                                     const TrainConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  if (train.dimension() == 0) throw Error(ErrorKind::Dimension, "feature dimension must be > 0");
  if (train.y.size() != train.size()) throw Error(ErrorKind::Dimension, "labels missing");
  if (distinct_classes(train.y) < 2) {
    throw Error(ErrorKind::InvalidArgument, "training needs at least two classes");
  }

  WideDeepModel model;
  model.selection = selection;
  model.config = cfg;
  model.scaler = fit_scaler(train.x);
  const Eigen::MatrixXd x = apply_scaler(model.scaler, train.x);
  model.params = initialize_params(train.dimension(), cfg);

  Optimizer opt(cfg.optimizer_config());
  auto params = model.params.tensors();
  if (!cfg.learn_combine_weights || !cfg.deep_enabled) params.pop_back();

  Rng shuffler(derive_seed(cfg.seed, 2));
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  Eigen::MatrixXd batch_x;
  std::vector<std::size_t> batch_y;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - start);
      batch_x.resize(rows, x.cols());
      batch_y.resize(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch_x.row(static_cast<Eigen::Index>(i - start)) = x.row(static_cast<Eigen::Index>(order[i]));
        batch_y[i - start] = train.y[order[i]];
      }
      auto lg = joint_loss_and_gradient(model.params, batch_x, batch_y, cfg.class_weights);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError(epoch, "training diverged (non-finite loss) at epoch " +
                                       std::to_string(epoch));
      }
      epoch_loss += lg.loss * static_cast<double>(end - start);
      const auto& grad_params = lg.gradient;
      std::vector<const Eigen::MatrixXd*> grads = grad_params.tensors();
      grads.resize(params.size());
      try {
        opt.step(params, grads);
      } catch (const Error& e) {
        throw TrainingError(epoch, std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
    }
    model.history.push_back(epoch_loss / static_cast<double>(n));
  }
  return model;
}

/// Standalone multinomial logit: the wide component alone, trained by the
/// same loop with the deep component disabled.
inline WideDeepModel train_glm(const Dataset& train, const FeatureSelection& selection,
                               TrainConfig cfg) {
  cfg.deep_enabled = false;
  cfg.learn_combine_weights = false;
  cfg.init_w_wide = 1.0;
  return train_wide_deep(train, selection, cfg);
}

}  // namespace modeforge
