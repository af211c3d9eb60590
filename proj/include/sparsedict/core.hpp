#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparsedict {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Data matrix, one signal (or vectorized patch) per column.
using TrainingSet = Matrix;

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kUnitNormTolerance = 1e-9;

/// Dense m x K matrix whose columns (atoms) all have unit Euclidean norm.
class Dictionary {
public:
  Dictionary() = default;

  /// Throws InvalidInput unless every column has norm 1 within 1e-9.
  explicit Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {
    if (atoms_.rows() < 1 || atoms_.cols() < 1)
      throw InvalidInput("dictionary must have m >= 1 and K >= 1");
    for (Index j = 0; j < atoms_.cols(); ++j) {
      const double n = atoms_.col(j).norm();
      if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance)
        throw InvalidInput("dictionary atom " + std::to_string(j) +
                           " is not unit-norm (norm " + std::to_string(n) + ")");
    }
  }

  const Matrix& atoms() const noexcept { return atoms_; }
  Index rows() const noexcept { return atoms_.rows(); }
  Index cols() const noexcept { return atoms_.cols(); }
  auto atom(Index j) const { return atoms_.col(j); }

  friend bool operator==(const Dictionary& a, const Dictionary& b) {
    return a.atoms_.rows() == b.atoms_.rows() && a.atoms_.cols() == b.atoms_.cols() &&
           a.atoms_ == b.atoms_;
  }

private:
  Matrix atoms_;
};

/// Sparse vector stored as (index, value) pairs with strictly increasing
/// indices. Explicit zeros are never stored.
class SparseVector {
public:
  using Entry = std::pair<Index, double>;

  SparseVector() = default;
  explicit SparseVector(Index length) : length_(length) {}

  /// Entries may arrive in any order; zeros are dropped.
  SparseVector(Index length, std::vector<Entry> entries) : length_(length) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    for (const auto& e : entries) {
      if (e.first < 0 || e.first >= length_)
        throw InvalidInput("sparse index " + std::to_string(e.first) + " out of range");
      if (!entries_.empty() && entries_.back().first == e.first)
        throw InvalidInput("duplicate sparse index " + std::to_string(e.first));
      if (e.second != 0.0) entries_.push_back(e);
    }
  }

  Index length() const noexcept { return length_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  double operator[](Index i) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), i,
                               [](const Entry& e, Index k) { return e.first < k; });
    return (it != entries_.end() && it->first == i) ? it->second : 0.0;
  }

  double norm() const {
    double acc = 0.0;
    for (const auto& e : entries_) acc += e.second * e.second;
    return std::sqrt(acc);
  }

  Vector dense() const {
    Vector v = Vector::Zero(length_);
    for (const auto& e : entries_) v(e.first) = e.second;
    return v;
  }

  static SparseVector from_dense(const Eigen::Ref<const Vector>& v) {
    SparseVector out(v.size());
    for (Index i = 0; i < v.size(); ++i)
      if (v(i) != 0.0) out.entries_.emplace_back(i, v(i));
    return out;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

private:
  Index length_ = 0;
  std::vector<Entry> entries_;
};

/// y = D x for a sparse x.
inline Vector apply(const Matrix& D, const SparseVector& x) {
  Vector y = Vector::Zero(D.rows());
  for (const auto& [j, v] : x.entries()) y.noalias() += v * D.col(j);
  return y;
}

/// K x N coefficient matrix stored column by column.
class SparseCodeMatrix {
public:
  SparseCodeMatrix() = default;
  SparseCodeMatrix(Index rows, Index cols)
      : rows_(rows), columns_(static_cast<std::size_t>(cols), SparseVector(rows)) {}

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return static_cast<Index>(columns_.size()); }

  const SparseVector& col(Index i) const { return columns_[static_cast<std::size_t>(i)]; }
  SparseVector& col(Index i) { return columns_[static_cast<std::size_t>(i)]; }

  void set_col(Index i, SparseVector v) {
    if (v.length() != rows_) throw InvalidInput("sparse column length mismatch");
    columns_[static_cast<std::size_t>(i)] = std::move(v);
  }

  std::size_t max_column_nnz() const {
    std::size_t s = 0;
    for (const auto& c : columns_) s = std::max(s, c.nnz());
    return s;
  }

  double frobenius_norm() const {
    double acc = 0.0;
    for (const auto& c : columns_)
      for (const auto& e : c.entries()) acc += e.second * e.second;
    return std::sqrt(acc);
  }

  /// Number of columns that use each atom.
  std::vector<std::size_t> usage() const {
    std::vector<std::size_t> u(static_cast<std::size_t>(rows_), 0);
    for (const auto& c : columns_)
      for (const auto& e : c.entries()) ++u[static_cast<std::size_t>(e.first)];
    return u;
  }

  Matrix dense() const {
    Matrix X = Matrix::Zero(rows_, cols());
    for (Index i = 0; i < cols(); ++i)
      for (const auto& [j, v] : col(i).entries()) X(j, i) = v;
    return X;
  }

  static SparseCodeMatrix from_dense(const Matrix& X) {
    SparseCodeMatrix out(X.rows(), X.cols());
    for (Index i = 0; i < X.cols(); ++i) out.columns_[static_cast<std::size_t>(i)] =
        SparseVector::from_dense(X.col(i));
    return out;
  }

  friend bool operator==(const SparseCodeMatrix&, const SparseCodeMatrix&) = default;

private:
  Index rows_ = 0;
  std::vector<SparseVector> columns_;
};

/// D X as a dense m x N matrix.
inline Matrix apply(const Matrix& D, const SparseCodeMatrix& X) {
  Matrix out(D.rows(), X.cols());
  for (Index i = 0; i < X.cols(); ++i) out.col(i) = apply(D, X.col(i));
  return out;
}

/// ||Y - D X||_F without materializing D X.
inline double residual_frobenius(const Matrix& Y, const Matrix& D, const SparseCodeMatrix& X) {
  if (Y.cols() != X.cols() || D.cols() != X.rows() || Y.rows() != D.rows())
    throw InvalidInput("residual_frobenius: dimension mismatch");
  double acc = 0.0;
  Vector r(Y.rows());
  for (Index i = 0; i < Y.cols(); ++i) {
    r = Y.col(i);
    for (const auto& [j, v] : X.col(i).entries()) r.noalias() -= v * D.col(j);
    acc += r.squaredNorm();
  }
  return std::sqrt(acc);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& M) { return M.allFinite(); }

} // namespace sparsedict
