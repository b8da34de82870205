#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modeforge/error.hpp"

namespace modeforge {

enum class OptimizerKind { AdaGrad, RMSProp, Adam };

inline const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::AdaGrad: return "adagrad";
    case OptimizerKind::RMSProp: return "rmsprop";
    case OptimizerKind::Adam: return "adam";
  }
  return "?";
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adagrad") return OptimizerKind::AdaGrad;
  if (s == "rmsprop") return OptimizerKind::RMSProp;
  if (s == "adam") return OptimizerKind::Adam;
  throw Error(ErrorKind::Config, "unknown optimizer '" + s + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::RMSProp;
  double learning_rate = 0.01;
  double rmsprop_decay = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double epsilon = 1e-8;
};

using Tensor = Eigen::MatrixXd;

/// Per-tensor accumulators; zero-initialized on first use.
struct OptimizerState {
  Tensor first;   // AdaGrad G, RMSProp E, Adam m
  Tensor second;  // Adam v
};

inline void require_finite(const Tensor& g) {
  if (!g.allFinite()) throw Error(ErrorKind::Numeric, "non-finite gradient");
}

/// G += g^2; theta -= lr * g / (sqrt(G) + eps)
inline void adagrad_step(Tensor& theta, const Tensor& g, Tensor& accum, double lr, double eps) {
  require_finite(g);
  accum.array() += g.array().square();
  theta.array() -= lr * g.array() / (accum.array().sqrt() + eps);
}

/// E = rho E + (1 - rho) g^2; theta -= lr * g / (sqrt(E) + eps)
inline void rmsprop_step(Tensor& theta, const Tensor& g, Tensor& avg, double lr, double rho,
                         double eps) {
  require_finite(g);
  avg.array() = rho * avg.array() + (1.0 - rho) * g.array().square();
  theta.array() -= lr * g.array() / (avg.array().sqrt() + eps);
}

/// Bias-corrected Adam; `t` is the 1-based step count.
inline void adam_step(Tensor& theta, const Tensor& g, Tensor& m, Tensor& v, std::size_t t,
                      double lr, double beta1, double beta2, double eps) {
  require_finite(g);
  m.array() = beta1 * m.array() + (1.0 - beta1) * g.array();
  v.array() = beta2 * v.array() + (1.0 - beta2) * g.array().square();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

/// Applies one configured update to a list of parameter tensors.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
    if (!(cfg_.learning_rate > 0.0) || !std::isfinite(cfg_.learning_rate)) {
      throw Error(ErrorKind::Config, "learning rate must be positive");
    }
  }

  const OptimizerConfig& config() const { return cfg_; }
  std::size_t steps() const { return t_; }

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size()) {
      throw Error(ErrorKind::Dimension, "parameter/gradient list length mismatch");
    }
    if (state_.empty()) {
      state_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        state_[i].first = Tensor::Zero(params[i]->rows(), params[i]->cols());
        if (cfg_.kind == OptimizerKind::Adam) {
          state_[i].second = Tensor::Zero(params[i]->rows(), params[i]->cols());
        }
      }
    }
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& theta = *params[i];
      const Tensor& g = *grads[i];
      if (g.rows() != theta.rows() || g.cols() != theta.cols()) {
        throw Error(ErrorKind::Dimension, "gradient shape mismatch for tensor " + std::to_string(i));
      }
      switch (cfg_.kind) {
        case OptimizerKind::AdaGrad:
          adagrad_step(theta, g, state_[i].first, cfg_.learning_rate, cfg_.epsilon);
          break;
        case OptimizerKind::RMSProp:
          rmsprop_step(theta, g, state_[i].first, cfg_.learning_rate, cfg_.rmsprop_decay,
                       cfg_.epsilon);
          break;
        case OptimizerKind::Adam:
          adam_step(theta, g, state_[i].first, state_[i].second, t_, cfg_.learning_rate,
                    cfg_.adam_beta1, cfg_.adam_beta2, cfg_.epsilon);
          break;
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<OptimizerState> state_;
  std::size_t t_ = 0;
};

}  // namespace modeforge
