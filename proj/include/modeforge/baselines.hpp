#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "modeforge/dataset.hpp"
#include "modeforge/error.hpp"
#include "modeforge/features.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/rng.hpp"

namespace modeforge {

using ClassCounts = std::array<double, kNumModes>;

/// 1 - sum_k p_k^2 over the class proportions.
inline double gini(const ClassCounts& counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

/// Highest count wins; ties go to the lowest class index.
inline std::size_t majority(const ClassCounts& counts) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumModes; ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return best;
}

struct TreeConfig {
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 1;
  /// Candidate features per split; 0 means all.
  std::size_t max_features = 0;
};

struct TreeNode {
  static constexpr std::uint32_t kLeaf = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t feature = kLeaf;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  ClassCounts counts{};

  bool is_leaf() const { return feature == kLeaf; }
};

/// Binary CART tree; rows with x[feature] <= threshold go left.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }

  std::size_t depth() const { return nodes_.empty() ? 0 : depth_of(0); }

  template <typename Row>
  const TreeNode& leaf(const Row& x) const {
    if (nodes_.empty()) throw Error(ErrorKind::InvalidArgument, "empty decision tree");
    std::uint32_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const auto& n = nodes_[i];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i];
  }

  template <typename Row>
  std::size_t predict(const Row& x) const {
    return majority(leaf(x).counts);
  }

  template <typename Row>
  ClassCounts distribution(const Row& x) const {
    ClassCounts c = leaf(x).counts;
    const double n = std::accumulate(c.begin(), c.end(), 0.0);
    for (double& v : c) v /= n;
    return c;
  }

 private:
  std::size_t depth_of(std::uint32_t i) const {
    if (nodes_[i].is_leaf()) return 0;
    return 1 + std::max(depth_of(nodes_[i].left), depth_of(nodes_[i].right));
  }

  std::vector<TreeNode> nodes_;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<std::size_t>& y, const TreeConfig& cfg, Rng* rng)
      : x_(x), y_(y), cfg_(cfg), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  struct Split {
    std::uint32_t feature = TreeNode::kLeaf;
    double threshold = 0.0;
    double gain = 0.0;
  };

  ClassCounts count(const std::vector<std::size_t>& rows) const {
    ClassCounts c{};
    for (auto r : rows) c[y_[r]] += 1.0;
    return c;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = static_cast<std::size_t>(x_.cols());
    std::vector<std::size_t> f(d);
    std::iota(f.begin(), f.end(), std::size_t{0});
    if (cfg_.max_features == 0 || cfg_.max_features >= d || rng_ == nullptr) return f;
    // partial Fisher-Yates, then sorted so scan order stays feature-ascending
    for (std::size_t i = 0; i < cfg_.max_features; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_->below(d - i));
      std::swap(f[i], f[j]);
    }
    f.resize(cfg_.max_features);
    std::sort(f.begin(), f.end());
    return f;
  }

  Split best_split(const std::vector<std::size_t>& rows, const ClassCounts& total) {
    Split best;
    const double n = static_cast<double>(rows.size());
    const double parent = gini(total);
    std::vector<std::pair<double, std::size_t>> vals(rows.size());
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        vals[i] = {x_(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)), y_[rows[i]]};
      }
      std::sort(vals.begin(), vals.end());
      ClassCounts left{};
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left[vals[i].second] += 1.0;
        if (vals[i].first == vals[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (nl < static_cast<double>(cfg_.min_samples_leaf) ||
            nr < static_cast<double>(cfg_.min_samples_leaf)) {
          continue;
        }
        ClassCounts right;
        for (std::size_t k = 0; k < kNumModes; ++k) right[k] = total[k] - left[k];
        const double gain = parent - (nl / n) * gini(left) - (nr / n) * gini(right);
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<std::uint32_t>(f);
          best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
          // identical neighbours can round the midpoint onto the upper value
          if (!(best.threshold < vals[i + 1].first)) best.threshold = vals[i].first;
        }
      }
    }
    return best;
  }

  std::uint32_t grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    const ClassCounts counts = count(rows);
    nodes_[id].counts = counts;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    if (pure || depth >= cfg_.max_depth || rows.size() < 2 * std::max<std::size_t>(1, cfg_.min_samples_leaf)) {
      return id;
    }
    const Split s = best_split(rows, counts);
    if (s.feature == TreeNode::kLeaf) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_(static_cast<Eigen::Index>(r), s.feature) <= s.threshold ? left : right).push_back(r);
    }
    const std::uint32_t l = grow(left, depth + 1);
    const std::uint32_t r = grow(right, depth + 1);
    nodes_[id].feature = s.feature;
    nodes_[id].threshold = s.threshold;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const Matrix& x_;
  const std::vector<std::size_t>& y_;
  const TreeConfig& cfg_;
  Rng* rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

/// Greedy CART on Gini gain over all rows of `data`. Candidate thresholds are
/// midpoints between consecutive distinct feature values.
inline DecisionTree train_tree(const Dataset& data, const TreeConfig& cfg = {}) {
  if (data.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeConfig all = cfg;
  all.max_features = 0;
  return detail::TreeBuilder(data.x, data.y, all, nullptr).build(std::move(rows));
}

struct ForestConfig {
  std::size_t n_trees = 100;
  bool bootstrap = true;
  /// Random-forest feature subsampling (ceil(sqrt(d)) per split) vs bagging.
  bool random_features = true;
  /// Overrides ceil(sqrt(d)) when non-zero.
  std::size_t max_features = 0;
  TreeConfig tree;
  std::uint64_t seed = 42;
};

/// Tree ensemble predicting by majority vote, bound to its selection/scaler.
struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  FeatureScaler scaler;
  FeatureSelection selection;

  template <typename Row>
  ClassCounts votes(const Row& x) const {
    ClassCounts v{};
    for (const auto& t : trees) v[t.predict(x)] += 1.0;
    return v;
  }

  /// Majority vote over normalized rows; ties to the lowest class index.
  template <typename Row>
  std::size_t predict_normalized(const Row& x) const {
    return majority(votes(x));
  }

  /// Mean of per-tree leaf class distributions.
  template <typename Row>
  ClassCounts proba_normalized(const Row& x) const {
    ClassCounts p{};
    for (const auto& t : trees) {
      const auto d = t.distribution(x);
      for (std::size_t k = 0; k < kNumModes; ++k) p[k] += d[k];
    }
    for (double& v : p) v /= static_cast<double>(trees.size());
    return p;
  }
};

inline std::size_t default_max_features(std::size_t d) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
}

/// Trains on already-normalized rows. Tree i draws its bootstrap sample and
/// feature subsets from its own seeded stream.
inline ForestModel train_forest_normalized(const Dataset& data, const ForestConfig& cfg) {
  if (cfg.n_trees < 1) throw Error(ErrorKind::Config, "n_trees must be >= 1");
  if (data.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  ForestModel model;
  model.config = cfg;
  TreeConfig tree_cfg = cfg.tree;
  tree_cfg.max_features = cfg.random_features
                              ? (cfg.max_features ? cfg.max_features : default_max_features(data.dimension()))
                              : 0;
  const std::size_t n = data.size();
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, 1000 + t));
    std::vector<std::size_t> rows(n);
    if (cfg.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees.push_back(detail::TreeBuilder(data.x, data.y, tree_cfg, &rng).build(std::move(rows)));
  }
  return model;
}

namespace detail {

inline ForestModel fit_forest(const Dataset& raw, const FeatureSelection& selection,
                              const ForestConfig& cfg) {
  Dataset scaled;
  auto scaler = fit_scaler(raw.x);
  scaled.x = apply_scaler(scaler, raw.x);
  scaled.y = raw.y;
  auto model = train_forest_normalized(scaled, cfg);
  model.scaler = std::move(scaler);
  model.selection = selection;
  return model;
}

}  // namespace detail

/// Bootstrap-aggregated full-feature trees.
inline ForestModel train_bagging(const Dataset& raw, const FeatureSelection& selection,
                                 ForestConfig cfg) {
  cfg.random_features = false;
  return detail::fit_forest(raw, selection, cfg);
}

/// Bootstrap trees with ceil(sqrt(d)) candidate features per split.
inline ForestModel train_random_forest(const Dataset& raw, const FeatureSelection& selection,
                                       ForestConfig cfg) {
  cfg.random_features = true;
  return detail::fit_forest(raw, selection, cfg);
}

/// A plain CART tree wrapped as a one-tree, no-bootstrap ensemble.
inline ForestModel train_single_tree(const Dataset& raw, const FeatureSelection& selection,
                                     ForestConfig cfg) {
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  cfg.random_features = false;
  return detail::fit_forest(raw, selection, cfg);
}

}  // namespace modeforge
