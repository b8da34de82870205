#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include <Eigen/Dense>

#include "modeforge/error.hpp"
#include "modeforge/features.hpp"
#include "modeforge/mode.hpp"

namespace modeforge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Dense sample matrix (one row per trip) with class-index labels.
struct Dataset {
  Matrix x;
  std::vector<std::size_t> y;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(x.cols()); }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
      if (!y.empty()) out.y.push_back(y[rows[i]]);
    }
    return out;
  }
};

/// Raw selected columns; labels required when `labeled`.
inline Dataset make_dataset(const std::vector<FeatureVector>& rows, const FeatureSelection& sel,
                            bool labeled = true) {
  const auto cols = sel.columns();
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].raw[cols[j]];
    }
    if (labeled) {
      if (!rows[i].label) {
        throw Error(ErrorKind::InvalidArgument, "trip '" + rows[i].trip_id + "' has no label");
      }
      ds.y.push_back(index_of(*rows[i].label));
    }
  }
  return ds;
}

inline std::vector<std::vector<double>> to_rows(const Matrix& x) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    rows[static_cast<std::size_t>(i)].assign(x.row(i).data(), x.row(i).data() + x.cols());
  }
  return rows;
}

inline FeatureScaler fit_scaler(const Matrix& x) { return FeatureScaler::fit(to_rows(x)); }

inline Matrix apply_scaler(const FeatureScaler& s, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != s.dimension()) {
    throw Error(ErrorKind::Dimension, "matrix has " + std::to_string(x.cols()) +
                                          " columns, scaler expects " +
                                          std::to_string(s.dimension()));
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out(i, j) = s.apply(static_cast<std::size_t>(j), x(i, j));
    }
  }
  return out;
}

/// Number of distinct classes among the labels.
inline std::size_t distinct_classes(const std::vector<std::size_t>& y) {
  std::array<bool, kNumModes> seen{};
  for (auto c : y) {
    if (c >= kNumModes) throw Error(ErrorKind::InvalidArgument, "label out of class order");
    seen[c] = true;
  }
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
}

}  // namespace modeforge
