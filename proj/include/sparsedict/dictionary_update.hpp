#pragma once

// Method of optimal directions: for fixed codes X, D = argmin ||Y - D X||_F,
// i.e. D (X X^T) = Y X^T. Solved through an eigendecomposition of the
// symmetric PSD matrix X X^T with a relative rank cutoff, so rank-deficient
// problems get the minimum-norm solution.

#include "sparsedict/core.hpp"
#include "sparsedict/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace sparsedict {

inline constexpr double kModRankTolerance = 1e-10;
inline constexpr double kTwinCorrelation = 0.999;

struct UpdateDiagnostics {
  std::vector<Index> replaced_atoms;
  /// Atoms with no usage in X; they keep their previous value until replaced.
  std::vector<Index> unused_atoms;
  /// ||Y - D X||_F for the least-squares D, before normalization.
  double residual_fro = 0.0;
};

struct NormalizedColumns {
  Matrix atoms;
  /// Original column norms; 0 marks a zero column left as is.
  Vector scales;
};

inline NormalizedColumns normalize_columns(const Matrix& D) {
  NormalizedColumns out{D, Vector::Zero(D.cols())};
  for (Index j = 0; j < D.cols(); ++j) {
    const double n = D.col(j).norm();
    if (n > 0.0) {
      out.atoms.col(j) /= n;
      out.scales(j) = n;
    }
  }
  return out;
}

/// Gram products A = X X^T and B = Y X^T accumulated from the sparse columns.
inline std::pair<Matrix, Matrix> mod_normal_equations(const TrainingSet& Y,
                                                      const SparseCodeMatrix& X) {
  const Index K = X.rows();
  Matrix A = Matrix::Zero(K, K);
  Matrix B = Matrix::Zero(Y.rows(), K);
  for (Index i = 0; i < X.cols(); ++i) {
    const auto& e = X.col(i).entries();
    for (std::size_t a = 0; a < e.size(); ++a) {
      B.col(e[a].first).noalias() += e[a].second * Y.col(i);
      for (std::size_t b = 0; b < e.size(); ++b) A(e[a].first, e[b].first) += e[a].second * e[b].second;
    }
  }
  return {std::move(A), std::move(B)};
}

/// Least-squares dictionary before normalization. Columns of unused atoms are zero.
inline Matrix mod_solve(const TrainingSet& Y, const SparseCodeMatrix& X) {
  const Index K = X.rows();
  auto [A, B] = mod_normal_equations(Y, X);
  const auto usage = X.usage();
  std::vector<Index> used;
  for (Index j = 0; j < K; ++j)
    if (usage[static_cast<std::size_t>(j)] > 0) used.push_back(j);

  Matrix D = Matrix::Zero(Y.rows(), K);
  if (used.empty()) return D;
  const Index k = static_cast<Index>(used.size());
  Matrix As(k, k);
  Matrix Bs(Y.rows(), k);
  for (Index a = 0; a < k; ++a) {
    Bs.col(a) = B.col(used[static_cast<std::size_t>(a)]);
    for (Index b = 0; b < k; ++b) As(a, b) = A(used[static_cast<std::size_t>(a)], used[static_cast<std::size_t>(b)]);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(As);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = kModRankTolerance * std::max(lambda.maxCoeff(), 0.0);
  Vector inv = Vector::Zero(k);
  for (Index t = 0; t < k; ++t)
    if (lambda(t) > cutoff) inv(t) = 1.0 / lambda(t);
  const Matrix& V = eig.eigenvectors();
  const Matrix Ds = ((Bs * V) * inv.asDiagonal()) * V.transpose();
  for (Index a = 0; a < k; ++a) D.col(used[static_cast<std::size_t>(a)]) = Ds.col(a);
  return D;
}

struct ModResult {
  Dictionary dictionary;
  /// Column norms of the least-squares solution (0 for unused atoms).
  Vector scales;
  UpdateDiagnostics diagnostics;
};

inline ModResult mod_update(const TrainingSet& Y, const SparseCodeMatrix& X, const Dictionary& D_prev) {
  if (Y.cols() != X.cols() || X.rows() != D_prev.cols() || Y.rows() != D_prev.rows())
    throw InvalidInput("mod_update: expected Y m x N, X K x N, D m x K");

  ModResult out;
  const auto usage = X.usage();
  for (Index j = 0; j < X.rows(); ++j)
    if (usage[static_cast<std::size_t>(j)] == 0) out.diagnostics.unused_atoms.push_back(j);

  if (static_cast<Index>(out.diagnostics.unused_atoms.size()) == X.rows()) {
    out.dictionary = D_prev;
    out.scales = Vector::Zero(X.rows());
    out.diagnostics.residual_fro = Y.norm();
    return out;
  }

  const Matrix raw = mod_solve(Y, X);
  out.diagnostics.residual_fro = residual_frobenius(Y, raw, X);
  auto normalized = normalize_columns(raw);
  for (Index j = 0; j < raw.cols(); ++j)
    if (normalized.scales(j) == 0.0) normalized.atoms.col(j) = D_prev.atom(j);
  out.scales = std::move(normalized.scales);
  out.dictionary = Dictionary(std::move(normalized.atoms));
  return out;
}

/// X with row j multiplied by scales(j), so that D_normalized * result equals
/// D_raw * X whenever D_raw = D_normalized * diag(scales).
inline SparseCodeMatrix rescale_rows(const SparseCodeMatrix& X, const Vector& scales) {
  SparseCodeMatrix out(X.rows(), X.cols());
  for (Index i = 0; i < X.cols(); ++i) {
    std::vector<SparseVector::Entry> e = X.col(i).entries();
    for (auto& [j, v] : e) v *= scales(j);
    out.set_col(i, SparseVector(X.rows(), std::move(e)));
  }
  return out;
}

struct ReplacementResult {
  Dictionary dictionary;
  std::vector<Index> replaced;
  /// Degenerate atoms for which no nonzero data column was left; these get a
  /// seeded random unit vector instead.
  std::vector<Index> unfilled;
};

/// Atoms that are unused, zero, or near-duplicates of a lower-indexed atom.
inline std::vector<Index> degenerate_atoms(const Matrix& D, const SparseCodeMatrix& X) {
  const Index K = D.cols();
  const auto usage = X.usage();
  std::vector<char> bad(static_cast<std::size_t>(K), 0);
  for (Index j = 0; j < K; ++j)
    if (usage[static_cast<std::size_t>(j)] == 0 || D.col(j).norm() == 0.0) bad[static_cast<std::size_t>(j)] = 1;
  const Matrix G = D.transpose() * D;
  for (Index i = 0; i < K; ++i) {
    if (bad[static_cast<std::size_t>(i)]) continue;
    for (Index j = i + 1; j < K; ++j)
      if (!bad[static_cast<std::size_t>(j)] && std::abs(G(i, j)) > kTwinCorrelation) bad[static_cast<std::size_t>(j)] = 1;
  }
  std::vector<Index> out;
  for (Index j = 0; j < K; ++j)
    if (bad[static_cast<std::size_t>(j)]) out.push_back(j);
  return out;
}

/// Replaces degenerate atoms by normalized data columns with the largest
/// residual ||y_i - D x_i||, each column used at most once. Equal residuals
/// are ordered by a seeded random key.
inline ReplacementResult replace_degenerate_atoms(const Dictionary& D, const TrainingSet& Y,
                                                  const SparseCodeMatrix& X, std::uint64_t seed) {
  if (Y.cols() != X.cols() || X.rows() != D.cols() || Y.rows() != D.rows())
    throw InvalidInput("replace_degenerate_atoms: dimension mismatch");
  ReplacementResult out;
  out.replaced = degenerate_atoms(D.atoms(), X);
  if (out.replaced.empty()) {
    out.dictionary = D;
    return out;
  }

  const Index N = Y.cols();
  std::vector<double> residual(static_cast<std::size_t>(N));
  for (Index i = 0; i < N; ++i) {
    if (Y.col(i).norm() == 0.0) {
      residual[static_cast<std::size_t>(i)] = -1.0;
      continue;
    }
    residual[static_cast<std::size_t>(i)] = (Y.col(i) - apply(D.atoms(), X.col(i))).norm();
  }
  Rng rng(seed);
  std::vector<std::uint64_t> key(static_cast<std::size_t>(N));
  for (auto& k : key) k = rng.next();
  std::vector<Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (residual[ua] != residual[ub]) return residual[ua] > residual[ub];
    return key[ua] < key[ub];
  });

  Matrix atoms = D.atoms();
  std::size_t next = 0;
  for (Index j : out.replaced) {
    if (next < order.size() && residual[static_cast<std::size_t>(order[next])] >= 0.0) {
      const Index i = order[next++];
      atoms.col(j) = Y.col(i) / Y.col(i).norm();
    } else {
      Vector v(atoms.rows());
      do {
        for (Index r = 0; r < v.size(); ++r) v(r) = rng.normal();
      } while (v.norm() == 0.0);
      atoms.col(j) = v / v.norm();
      out.unfilled.push_back(j);
    }
  }
  out.dictionary = Dictionary(std::move(atoms));
  return out;
}

} // namespace sparsedict
