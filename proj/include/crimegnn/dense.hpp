#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crimegnn {

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void require_shape(bool ok, const char* op, const DenseMatrix& a,
                          const DenseMatrix& b) {
  if (!ok) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace detail

// a * b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_shape(a.cols() == b.rows(), "matmul", a, b);
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      const auto b_row = b.row(p);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aip * b_row[j];
    }
  }
  return out;
}

// aᵀ * b
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_shape(a.rows() == b.rows(), "matmul_tn", a, b);
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const auto a_row = a.row(p);
    const auto b_row = b.row(p);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double api = a_row[i];
      if (api == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += api * b_row[j];
    }
  }
  return out;
}

// a * bᵀ
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_shape(a.cols() == b.cols(), "matmul_nt", a, b);
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto b_row = b.row(j);
      double sum = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) sum += a_row[p] * b_row[p];
      out(i, j) = sum;
    }
  }
  return out;
}

inline std::vector<double> column_sums(const DenseMatrix& m) {
  std::vector<double> sums(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) sums[j] += r[j];
  }
  return sums;
}

// Symmetric or general sparse matrix in CSR form, used as a linear operator.
class SparseMatrix {
 public:
  struct Entry {
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(std::size_t n, std::vector<std::size_t> offsets, std::vector<Entry> entries)
      : n_(n), offsets_(std::move(offsets)), entries_(std::move(entries)) {}

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return n_; }

  std::span<const Entry> row(std::size_t r) const {
    return {entries_.data() + offsets_[r], entries_.data() + offsets_[r + 1]};
  }

  double at(std::size_t r, std::size_t c) const {
    for (const auto& e : row(r)) {
      if (e.col == c) return e.value;
    }
    return 0.0;
  }

  DenseMatrix multiply(const DenseMatrix& x) const {
    if (x.rows() != n_) {
      throw std::invalid_argument("sparse multiply: operand has " + std::to_string(x.rows()) +
                                  " rows, expected " + std::to_string(n_));
    }
    DenseMatrix out(n_, x.cols());
    for (std::size_t i = 0; i < n_; ++i) {
      auto out_row = out.row(i);
      for (const auto& e : row(i)) {
        const auto x_row = x.row(e.col);
        for (std::size_t j = 0; j < x.cols(); ++j) out_row[j] += e.value * x_row[j];
      }
    }
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
};

}  // namespace crimegnn
