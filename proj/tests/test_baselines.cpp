#include <cmath>

#include <gtest/gtest.h>

#include "modeforge/baselines.hpp"
#include "modeforge/classifier.hpp"

using namespace modeforge;

namespace {

Dataset from_rows(const std::vector<std::vector<double>>& x, const std::vector<std::size_t>& y) {
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.front().size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i][j];
  }
  d.y = y;
  return d;
}

// Four noisy classes in five dimensions, each centred on its own corner.
Dataset blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), 5);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(rng.below(kNumModes));
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double centre = (static_cast<std::size_t>(j) % kNumModes == c) ? 3.0 : 0.0;
      d.x(static_cast<Eigen::Index>(i), j) = centre + rng.normal();
    }
    d.y.push_back(c);
  }
  return d;
}

template <typename Predict>
std::vector<std::size_t> predict_all(const Matrix& x, Predict&& f) {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(f(x.row(i)));
  return out;
}

}  // namespace

TEST(Gini, HandValues) {
  EXPECT_DOUBLE_EQ(gini({2, 2, 0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(gini({5, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(gini({1, 1, 1, 1}), 0.75);
  EXPECT_EQ(gini({0, 0, 0, 0}), 0.0);
}

TEST(Majority, TiesGoToLowestClass) {
  EXPECT_EQ(majority({2, 1, 0, 0}), 0u);
  EXPECT_EQ(majority({1, 1, 0, 0}), 0u);
  EXPECT_EQ(majority({0, 1, 1, 0}), 1u);
  EXPECT_EQ(majority({0, 0, 0, 3}), 3u);
}

TEST(Tree, PureDataIsSingleLeaf) {
  const auto t = train_tree(from_rows({{1}, {2}, {3}}, {2, 2, 2}));
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_EQ(t.predict(std::vector<double>{100.0}), 2u);
}

TEST(Tree, OneDimensionalSplitBetweenClusters) {
  const auto d = from_rows({{0}, {1}, {10}, {11}}, {0, 0, 1, 1});
  const auto t = train_tree(d);
  EXPECT_EQ(t.depth(), 1u);
  const auto& root = t.nodes()[0];
  EXPECT_GT(root.threshold, 1.0);
  EXPECT_LT(root.threshold, 10.0);
  EXPECT_DOUBLE_EQ(root.threshold, 5.5);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(t.predict(d.x.row(i)), d.y[static_cast<std::size_t>(i)]);
}

TEST(Tree, LeafCountsSumToRoutedSamples) {
  const auto d = blobs(400, 3);
  TreeConfig cfg;
  cfg.max_depth = 4;
  cfg.min_samples_leaf = 5;
  const auto t = train_tree(d, cfg);
  EXPECT_LE(t.depth(), 4u);
  std::vector<double> routed(t.nodes().size(), 0.0);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    const TreeNode* leaf = &t.leaf(d.x.row(i));
    routed[static_cast<std::size_t>(leaf - t.nodes().data())] += 1.0;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < t.nodes().size(); ++k) {
    const auto& n = t.nodes()[k];
    if (!n.is_leaf()) continue;
    const double c = n.counts[0] + n.counts[1] + n.counts[2] + n.counts[3];
    EXPECT_EQ(c, routed[k]);
    EXPECT_GE(c, 5.0);
    total += c;
  }
  EXPECT_EQ(total, 400.0);
}

TEST(Tree, InvariantUnderMonotoneTransform) {
  const auto d = blobs(300, 5);
  Dataset warped = d;
  warped.x = d.x.unaryExpr([](double v) { return std::exp(v) + v * v * v; });
  const auto a = train_tree(d);
  const auto b = train_tree(warped);
  ASSERT_EQ(a.nodes().size(), b.nodes().size());
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    ASSERT_EQ(&a.leaf(d.x.row(i)) - a.nodes().data(), &b.leaf(warped.x.row(i)) - b.nodes().data());
  }
}

TEST(Tree, EmptyDataThrows) {
  Dataset d;
  d.x.resize(0, 3);
  EXPECT_THROW(train_tree(d), Error);
}

TEST(Forest, SingleTreeWithoutBootstrapIsThePlainTree) {
  const auto d = blobs(500, 11);
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  cfg.random_features = false;
  const auto forest = train_forest_normalized(d, cfg);
  const auto tree = train_tree(d, cfg.tree);
  Rng rng(2);
  Matrix probe(2000, 5);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.uniform(-3.0, 6.0);
  EXPECT_EQ(predict_all(probe, [&](const auto& r) { return forest.predict_normalized(r); }),
            predict_all(probe, [&](const auto& r) { return tree.predict(r); }));
}

TEST(Forest, WrappedSingleTreeMatchesPlainTreeThroughScaler) {
  const auto d = blobs(300, 12);
  const auto wrapped = train_single_tree(d, FeatureSelection{}, {});
  Dataset scaled = d;
  scaled.x = apply_scaler(wrapped.scaler, d.x);
  const auto tree = train_tree(scaled, ForestConfig{}.tree);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    EXPECT_EQ(wrapped.predict_normalized(scaled.x.row(i)), tree.predict(scaled.x.row(i)));
  }
}

TEST(Forest, VoteTieGoesToLowerClass) {
  // two stumps that disagree everywhere: one always says Metro, the other Car
  ForestModel m;
  TreeNode metro;
  metro.counts = {0, 1, 0, 0};
  TreeNode car;
  car.counts = {1, 0, 0, 0};
  m.trees = {DecisionTree({metro}), DecisionTree({car})};
  EXPECT_EQ(m.predict_normalized(std::vector<double>{0.0}), 0u);
  m.trees.push_back(DecisionTree({metro}));
  EXPECT_EQ(m.predict_normalized(std::vector<double>{0.0}), 1u);
}

TEST(Forest, ReproducibleAndSeedSensitive) {
  const auto d = blobs(300, 13);
  ForestConfig cfg;
  cfg.n_trees = 10;
  const auto a = train_random_forest(d, FeatureSelection{}, cfg);
  const auto b = train_random_forest(d, FeatureSelection{}, cfg);
  ASSERT_EQ(a.trees.size(), 10u);
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    ASSERT_EQ(a.trees[t].nodes().size(), b.trees[t].nodes().size());
    for (std::size_t k = 0; k < a.trees[t].nodes().size(); ++k) {
      EXPECT_EQ(a.trees[t].nodes()[k].threshold, b.trees[t].nodes()[k].threshold);
      EXPECT_EQ(a.trees[t].nodes()[k].feature, b.trees[t].nodes()[k].feature);
    }
  }
  cfg.seed = 43;
  const auto c = train_random_forest(d, FeatureSelection{}, cfg);
  bool differs = false;
  for (std::size_t t = 0; t < a.trees.size() && !differs; ++t) {
    differs = a.trees[t].nodes().size() != c.trees[t].nodes().size() ||
              a.trees[t].nodes()[0].threshold != c.trees[t].nodes()[0].threshold;
  }
  EXPECT_TRUE(differs);
}

TEST(Forest, EnsemblesFitSeparatedBlobs) {
  const auto train = blobs(600, 20);
  const auto test = blobs(300, 21);
  ForestConfig cfg;
  cfg.n_trees = 25;
  for (auto kind : {ModelKind::Bagging, ModelKind::RandomForest, ModelKind::Tree, ModelKind::Glm}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.forest = cfg;
    spec.network.epochs = 50;
    const auto model = fit_classifier(train, spec);
    const auto pred = model.predict(test.x);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < test.size(); ++i) ok += pred.labels[i] == test.y[i];
    EXPECT_GT(static_cast<double>(ok) / static_cast<double>(test.size()), 0.8) << to_string(kind);
    for (Eigen::Index i = 0; i < pred.probabilities.rows(); ++i) {
      EXPECT_NEAR(pred.probabilities.row(i).sum(), 1.0, 1e-9);
    }
  }
}

TEST(Forest, DefaultFeatureCount) {
  EXPECT_EQ(default_max_features(14), 4u);
  EXPECT_EQ(default_max_features(11), 4u);
  EXPECT_EQ(default_max_features(9), 3u);
  EXPECT_EQ(default_max_features(1), 1u);
}

TEST(Forest, RejectsZeroTrees) {
  ForestConfig cfg;
  cfg.n_trees = 0;
  EXPECT_THROW(train_forest_normalized(blobs(10, 1), cfg), Error);
}
