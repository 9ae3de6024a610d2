#pragma once

#include <cmath>

#include "crimegnn/dense.hpp"
#include "crimegnn/objectives.hpp"

namespace crimegnn {

// Balance penalty on soft community sizes:
//   (sqrt(k) / n) * ||column_sums(S)||_2 - 1
// 0 for perfectly balanced columns, sqrt(k) - 1 when one column holds all mass.
inline double collapse_penalty(const SoftAssignment& s) {
  const auto sums = column_sums(s);
  double norm_sq = 0.0;
  for (const double c : sums) norm_sq += c * c;
  const double k = static_cast<double>(s.cols());
  const double n = static_cast<double>(s.rows());
  return std::sqrt(k) / n * std::sqrt(norm_sq) - 1.0;
}

// d penalty / d S. Every row gets the same vector (sqrt(k)/n) * c / ||c||.
inline DenseMatrix collapse_penalty_gradient(const SoftAssignment& s) {
  const auto sums = column_sums(s);
  double norm_sq = 0.0;
  for (const double c : sums) norm_sq += c * c;
  DenseMatrix grad(s.rows(), s.cols());
  const double norm = std::sqrt(norm_sq);
  if (norm == 0.0) return grad;
  const double scale =
      std::sqrt(static_cast<double>(s.cols())) / static_cast<double>(s.rows()) / norm;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = grad.row(i);
    for (std::size_t j = 0; j < s.cols(); ++j) r[j] = scale * sums[j];
  }
  return grad;
}

}  // namespace crimegnn
