#pragma once

#include "sparsedict/core.hpp"
#include "sparsedict/random.hpp"

#include <cstdint>
#include <limits>

namespace sparsedict {

struct SyntheticSpec {
  Index m = 30;
  Index K = 60;
  Index N = 40000;
  Index s = 6;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(1 <= s && s <= m && m < K && K <= N))
      throw InvalidInput("synthetic spec needs 1 <= s <= m < K <= N");
  }
};

/// i.i.d. N(0,1) entries drawn column by column, then unit-normalized columns.
inline Dictionary gen_dictionary(Index m, Index K, std::uint64_t seed) {
  if (m < 1 || K < 1) throw InvalidInput("gen_dictionary: m and K must be positive");
  Rng rng(seed);
  Matrix D(m, K);
  for (Index j = 0; j < K; ++j) {
    do {
      for (Index i = 0; i < m; ++i) D(i, j) = rng.normal();
    } while (D.col(j).norm() == 0.0);
    D.col(j).normalize();
  }
  return Dictionary(std::move(D));
}

struct SyntheticSignals {
  TrainingSet Y;
  SparseCodeMatrix X;
};

/// Each column combines s distinct uniformly chosen atoms with N(0,1) weights.
/// Y = D X with no noise.
inline SyntheticSignals gen_signals(const Dictionary& D, Index N, Index s, std::uint64_t seed) {
  if (s < 1 || s > D.cols()) throw InvalidInput("gen_signals: need 1 <= s <= K");
  Rng rng(seed);
  SyntheticSignals out{TrainingSet(D.rows(), N), SparseCodeMatrix(D.cols(), N)};
  for (Index i = 0; i < N; ++i) {
    const auto support = rng.sample_distinct(static_cast<std::size_t>(D.cols()), static_cast<std::size_t>(s));
    std::vector<SparseVector::Entry> entries;
    for (std::size_t idx : support) {
      double v;
      do {
        v = rng.normal();
      } while (v == 0.0);
      entries.emplace_back(static_cast<Index>(idx), v);
    }
    out.X.set_col(i, SparseVector(D.cols(), std::move(entries)));
    out.Y.col(i) = apply(D.atoms(), out.X.col(i));
  }
  return out;
}

/// True iff ||x||_0 <= s and ||y - D x||_2 <= eps.
inline bool sparse_model_check(const Eigen::Ref<const Vector>& y, const Matrix& D, const SparseVector& x,
                               double eps, Index s) {
  if (y.size() != D.rows() || x.length() != D.cols())
    throw InvalidInput("sparse_model_check: dimension mismatch");
  if (static_cast<Index>(x.nnz()) > s) return false;
  return (y - apply(D, x)).norm() <= eps;
}

struct CompositionCheck {
  bool holds = false;
  bool support_bound = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  Index composed_nnz = 0;
  Index support_limit = 0;
};

/// Two-stage sparsity composition. With Dt := D Z + E, y := Dt x1 + e1 and
/// r := Z x1, checks ||y - D r|| <= K eps2 + eps1, where K is the number of
/// columns of Dt, eps2 = ||x1|| max_j ||E_j||, eps1 = ||e1||; also checks
/// ||r||_0 <= ||x1||_0 max_j ||z_j||_0.
///
/// The algebra y - D r = E x1 + e1 is exact only in real arithmetic, so the
/// inequality is tested with a rounding allowance of 1e-12 (1 + ||y||).
inline CompositionCheck composition_bound_check(const Matrix& D, const Matrix& Z, const Matrix& E,
                                                const Vector& x1, const Vector& e1) {
  if (Z.rows() != D.cols() || E.rows() != D.rows() || E.cols() != Z.cols() || x1.size() != Z.cols() ||
      e1.size() != D.rows())
    throw InvalidInput("composition_bound_check: operands are not conformable");
  const double x1_norm = x1.norm();
  if (x1_norm == 0.0) throw InvalidInput("composition_bound_check: x1 must be nonzero");

  CompositionCheck out;
  const Matrix Dt = D * Z + E;
  const Vector y = Dt * x1 + e1;
  const Vector r = Z * x1;
  out.lhs = (y - D * r).norm();

  double max_e = 0.0;
  for (Index j = 0; j < E.cols(); ++j) max_e = std::max(max_e, E.col(j).norm());
  out.eps2 = x1_norm * max_e;
  out.eps1 = e1.norm();
  out.rhs = static_cast<double>(Dt.cols()) * out.eps2 + out.eps1;
  out.holds = out.lhs <= out.rhs + 1e-12 * (1.0 + y.norm());

  Index max_z = 0;
  for (Index j = 0; j < Z.cols(); ++j) max_z = std::max<Index>(max_z, (Z.col(j).array() != 0.0).count());
  const Index x1_nnz = (x1.array() != 0.0).count();
  out.support_limit = x1_nnz * max_z;
  out.composed_nnz = (r.array() != 0.0).count();
  out.support_bound = out.composed_nnz <= out.support_limit;
  return out;
}

} // namespace sparsedict
