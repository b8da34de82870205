#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modeforge/classifier.hpp"
#include "modeforge/dataset.hpp"
#include "modeforge/error.hpp"
#include "modeforge/mode.hpp"
#include "modeforge/parallel.hpp"
#include "modeforge/rng.hpp"

namespace modeforge {

struct FoldPlan {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::vector<std::size_t> assignments;  // sample index -> fold id

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] == fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] != fold) out.push_back(i);
    }
    return out;
  }
};

/// Seeded shuffle, then round-robin fold assignment.
inline FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 folds");
  if (n < k) {
    throw Error(ErrorKind::InvalidArgument, "cannot split " + std::to_string(n) + " samples into " +
                                                std::to_string(k) + " folds");
  }
  FoldPlan plan{seed, k, std::vector<std::size_t>(n)};
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  for (std::size_t i = 0; i < n; ++i) plan.assignments[perm[i]] = i % k;
  return plan;
}

/// Rows: reported (true) mode; columns: detected mode.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumModes>, kNumModes> counts{};

  void add(std::size_t truth, std::size_t predicted) { ++counts[truth][predicted]; }

  void merge(const ConfusionMatrix& o) {
    for (std::size_t i = 0; i < kNumModes; ++i) {
      for (std::size_t j = 0; j < kNumModes; ++j) counts[i][j] += o.counts[i][j];
    }
  }

  std::uint64_t row_sum(std::size_t i) const {
    std::uint64_t s = 0;
    for (auto c : counts[i]) s += c;
    return s;
  }

  std::uint64_t col_sum(std::size_t j) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < kNumModes; ++i) s += counts[i][j];
    return s;
  }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < kNumModes; ++i) s += row_sum(i);
    return s;
  }

  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < kNumModes; ++i) s += counts[i][i];
    return s;
  }

  static ConfusionMatrix from_rows(const std::array<std::array<std::uint64_t, kNumModes>, kNumModes>& rows) {
    ConfusionMatrix cm;
    cm.counts = rows;
    return cm;
  }
};

/// Undefined entries (empty row/column) are nullopt.
struct PrecisionRecall {
  std::array<std::optional<double>, kNumModes> precision;
  std::array<std::optional<double>, kNumModes> recall;
  std::optional<double> accuracy;
};

inline PrecisionRecall precision_recall(const ConfusionMatrix& cm) {
  PrecisionRecall pr;
  for (std::size_t k = 0; k < kNumModes; ++k) {
    const auto rs = cm.row_sum(k);
    const auto cs = cm.col_sum(k);
    if (rs > 0) pr.recall[k] = static_cast<double>(cm.counts[k][k]) / static_cast<double>(rs);
    if (cs > 0) pr.precision[k] = static_cast<double>(cm.counts[k][k]) / static_cast<double>(cs);
  }
  if (cm.total() > 0) pr.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
  return pr;
}

/// Fraction as a percentage rounded to `decimals` places.
inline double round_percent(double fraction, int decimals = 1) {
  const double scale = std::pow(10.0, decimals);
  return std::round(fraction * 100.0 * scale) / scale;
}

struct CvConfig {
  std::size_t folds = 10;
  std::size_t seeds = 10;
  std::uint64_t base_seed = 42;
  /// Fraction of samples drawn (per seed) before folding.
  double subsample_fraction = 1.0;
  std::size_t threads = 1;

  std::uint64_t seed_at(std::size_t s) const { return base_seed + s; }
};

struct FoldMetrics {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  std::size_t n_test = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double total_loss = 0.0;
  double average_loss = 0.0;
  double fit_seconds = 0.0;  // wall clock; excluded from file outputs
  ConfusionMatrix confusion;
};

struct CvResult {
  std::vector<FoldMetrics> folds;  // seed-major, fold-minor
  ConfusionMatrix pooled;
  std::size_t predictions = 0;
  double accuracy = 0.0;
  /// Sum of held-out cross-entropy over every seed and fold.
  double total_loss = 0.0;
  double average_loss = 0.0;
  /// Mean over cells of the per-fold held-out loss sum.
  double mean_fold_total_loss = 0.0;
  double max_fit_seconds = 0.0;
  /// held_out_count[s][i]: times sample i was held out under seed s.
  std::vector<std::vector<std::size_t>> held_out_count;
};

inline std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::Config, "subsample_fraction must be in (0, 1]");
  }
  std::vector<std::size_t> idx;
  if (fraction >= 1.0) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  Rng rng(derive_seed(seed, 77));
  idx = rng.permutation(n);
  idx.resize(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// k-fold x seeds cross-validation with a caller-supplied fitter.
/// `fit(train, cell_seed)` returns a predictor whose
/// `predict(const Matrix&)` yields `.labels` and `.probabilities`.
template <typename Fit>
CvResult cross_validate(const Dataset& data, const CvConfig& cfg, Fit&& fit) {
  if (data.y.size() != data.size()) throw Error(ErrorKind::InvalidArgument, "unlabeled data");
  if (cfg.seeds < 1) throw Error(ErrorKind::Config, "need at least one seed");
  const std::size_t cells = cfg.seeds * cfg.folds;

  std::vector<std::vector<std::size_t>> pools(cfg.seeds);
  std::vector<FoldPlan> plans(cfg.seeds);
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    pools[s] = subsample_indices(data.size(), cfg.subsample_fraction, cfg.seed_at(s));
    plans[s] = make_folds(pools[s].size(), cfg.folds, cfg.seed_at(s));
  }

  std::vector<FoldMetrics> metrics(cells);
  std::vector<std::vector<std::size_t>> tested(cells);
  parallel_for(cells, cfg.threads, [&](std::size_t cell) {
    const std::size_t s = cell / cfg.folds;
    const std::size_t f = cell % cfg.folds;
    std::vector<std::size_t> train_rows, test_rows;
    for (auto i : plans[s].train_indices(f)) train_rows.push_back(pools[s][i]);
    for (auto i : plans[s].test_indices(f)) test_rows.push_back(pools[s][i]);
    const Dataset train = data.subset(train_rows);
    const Dataset test = data.subset(test_rows);

    FoldMetrics m;
    m.seed = cfg.seed_at(s);
    m.fold = f;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto model = fit(train, derive_seed(m.seed, f));
      m.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto pred = model.predict(test.x);
      m.n_test = test.size();
      for (std::size_t i = 0; i < test.size(); ++i) {
        const std::size_t truth = test.y[i];
        const std::size_t guess = pred.labels[i];
        m.confusion.add(truth, guess);
        if (truth == guess) ++m.correct;
        m.total_loss += -std::log(std::max(pred.probabilities(static_cast<Eigen::Index>(i),
                                                              static_cast<Eigen::Index>(truth)),
                                           kProbabilityFloor));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "seed " + std::to_string(m.seed) + ", fold " + std::to_string(f) + ": " +
                                e.what());
    }
    m.accuracy = m.n_test ? static_cast<double>(m.correct) / static_cast<double>(m.n_test) : 0.0;
    m.average_loss = m.n_test ? m.total_loss / static_cast<double>(m.n_test) : 0.0;
    metrics[cell] = std::move(m);
    tested[cell] = std::move(test_rows);
  });

  CvResult r;
  r.held_out_count.assign(cfg.seeds, std::vector<std::size_t>(data.size(), 0));
  std::size_t correct = 0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const auto& m = metrics[cell];
    r.pooled.merge(m.confusion);
    r.predictions += m.n_test;
    correct += m.correct;
    r.total_loss += m.total_loss;
    r.max_fit_seconds = std::max(r.max_fit_seconds, m.fit_seconds);
    for (auto i : tested[cell]) ++r.held_out_count[cell / cfg.folds][i];
  }
  r.accuracy = r.predictions ? static_cast<double>(correct) / static_cast<double>(r.predictions) : 0.0;
  r.average_loss = r.predictions ? r.total_loss / static_cast<double>(r.predictions) : 0.0;
  r.mean_fold_total_loss = r.total_loss / static_cast<double>(cells);
  r.folds = std::move(metrics);
  return r;
}

/// Cross-validates one model specification; each cell trains with its own
/// derived seed.
inline CvResult cross_validate(const Dataset& data, const ModelSpec& spec, const CvConfig& cfg) {
  return cross_validate(data, cfg, [&spec](const Dataset& train, std::uint64_t cell_seed) {
    ModelSpec s = spec;
    s.network.seed = cell_seed;
    s.forest.seed = cell_seed;
    return fit_classifier(train, s);
  });
}

}  // namespace modeforge
