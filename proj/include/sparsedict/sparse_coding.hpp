#pragma once

// Orthogonal matching pursuit over a fixed dictionary.
//
// The coder keeps the Gram matrix G = D^T D and, per signal, the
// correlations D^T y. Each greedy step extends a Cholesky factor of the
// Gram submatrix on the support, re-solves the least-squares coefficients,
// and refreshes the correlations as D^T y - G[:, I] x_I. The residual itself
// is recomputed explicitly so stopping decisions use its true norm.

#include "sparsedict/core.hpp"
#include "sparsedict/parallel.hpp"

#include <cmath>
#include <limits>
#include <variant>
#include <vector>

namespace sparsedict {

struct FixedSparsity {
  Index s = 1;
};

struct ErrorBound {
  double eps = 0.0;
  Index s_max = 1;
};

using StopRule = std::variant<FixedSparsity, ErrorBound>;

struct OmpDiagnostics {
  /// Atom chosen at each greedy step, in selection order.
  std::vector<Index> selection_order;
  /// Residual norm before the first step and after each step.
  std::vector<double> residual_norms;
  /// The Gram submatrix on the support became numerically singular.
  bool singular_stop = false;
  /// Error-bound mode ran into s_max with the residual still above eps.
  bool cap_hit = false;

  double residual_norm() const { return residual_norms.empty() ? 0.0 : residual_norms.back(); }
};

struct OmpResult {
  SparseVector code;
  OmpDiagnostics diagnostics;
};

namespace omp_detail {

// Pivot below which the Gram submatrix counts as singular.
inline constexpr double kCholeskyGuard = 1e-12;
// Correlations within this distance of the maximum tie; lowest index wins.
inline constexpr double kTieTolerance = 1e-12;
// A residual this small relative to ||y|| is treated as exact.
inline constexpr double kExactResidual = 1e-12;

} // namespace omp_detail

class OmpCoder {
public:
  explicit OmpCoder(const Dictionary& D)
      : atoms_(D.atoms()), gram_(atoms_.transpose() * atoms_) {}

  Index signal_dim() const { return atoms_.rows(); }
  Index atom_count() const { return atoms_.cols(); }
  const Matrix& gram() const { return gram_; }

  /// Scratch buffers reused across calls on one thread.
  struct Workspace {
    Vector beta, corr, residual, rhs, g;
    Matrix chol;
    std::vector<char> selected;
    std::vector<Index> support;
  };

  OmpResult code(const Eigen::Ref<const Vector>& y, const StopRule& rule) const {
    Workspace ws;
    return code(y, rule, ws);
  }

  OmpResult code(const Eigen::Ref<const Vector>& y, const StopRule& rule, Workspace& ws) const {
    using namespace omp_detail;
    const Index m = atoms_.rows();
    const Index K = atoms_.cols();
    if (y.size() != m) throw InvalidInput("omp: signal length does not match dictionary");
    if (!y.allFinite()) throw InvalidInput("omp: non-finite entries in signal");

    Index cap = 0;
    double eps = -1.0;
    if (const auto* f = std::get_if<FixedSparsity>(&rule)) {
      if (f->s < 1 || f->s > std::min(m, K))
        throw InvalidInput("omp: sparsity must satisfy 1 <= s <= min(m, K)");
      cap = f->s;
    } else {
      const auto& e = std::get<ErrorBound>(rule);
      if (!(e.eps >= 0.0) || e.s_max < 1 || e.s_max > m)
        throw InvalidInput("omp: need eps >= 0 and 1 <= s_max <= m");
      cap = std::min(e.s_max, K);
      eps = e.eps;
    }

    OmpResult out;
    auto& diag = out.diagnostics;
    ws.beta.noalias() = atoms_.transpose() * y;
    ws.corr = ws.beta;
    ws.residual = y;
    const double y_norm = y.norm();
    double r_norm = y_norm;
    diag.residual_norms.push_back(r_norm);

    auto& support = ws.support;
    support.clear();
    ws.selected.assign(static_cast<std::size_t>(K), 0);
    if (ws.chol.rows() < cap) ws.chol.resize(cap, cap);
    ws.g.resize(cap);
    ws.rhs.resize(cap);
    auto& chol = ws.chol;

    for (Index k = 0;; ++k) {
      if (eps >= 0.0 && r_norm <= eps) break;
      if (r_norm <= kExactResidual * y_norm) break;
      if (k == cap) {
        diag.cap_hit = eps >= 0.0;
        break;
      }

      const Index j = pick_atom(ws.corr, ws.selected);
      if (j < 0) break;

      // Extend the Cholesky factor of G[I, I] by atom j.
      if (k == 0) {
        chol(0, 0) = std::sqrt(gram_(j, j));
      } else {
        auto w = ws.g.head(k);
        for (Index t = 0; t < k; ++t) w(t) = gram_(support[static_cast<std::size_t>(t)], j);
        chol.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(w);
        const double pivot = gram_(j, j) - w.squaredNorm();
        if (!(pivot > kCholeskyGuard)) {
          diag.singular_stop = true;
          break;
        }
        chol.block(k, 0, 1, k) = w.transpose();
        chol(k, k) = std::sqrt(pivot);
      }
      support.push_back(j);
      ws.selected[static_cast<std::size_t>(j)] = 1;
      diag.selection_order.push_back(j);

      const Index n = k + 1;
      auto x = ws.rhs.head(n);
      for (Index t = 0; t < n; ++t) x(t) = ws.beta(support[static_cast<std::size_t>(t)]);
      const auto Lk = chol.topLeftCorner(n, n).triangularView<Eigen::Lower>();
      Lk.solveInPlace(x);
      Lk.transpose().solveInPlace(x);

      ws.residual = y;
      ws.corr = ws.beta;
      for (Index t = 0; t < n; ++t) {
        const Index a = support[static_cast<std::size_t>(t)];
        ws.residual.noalias() -= x(t) * atoms_.col(a);
        ws.corr.noalias() -= x(t) * gram_.col(a);
      }
      r_norm = ws.residual.norm();
      diag.residual_norms.push_back(r_norm);
    }

    std::vector<SparseVector::Entry> entries;
    entries.reserve(support.size());
    for (std::size_t t = 0; t < support.size(); ++t)
      entries.emplace_back(support[t], ws.rhs(static_cast<Index>(t)));
    out.code = SparseVector(K, std::move(entries));
    return out;
  }

private:
  static Index pick_atom(const Vector& corr, const std::vector<char>& selected) {
    double best = -1.0;
    for (Index j = 0; j < corr.size(); ++j)
      if (!selected[static_cast<std::size_t>(j)]) best = std::max(best, std::abs(corr(j)));
    if (best < 0.0) return -1;
    for (Index j = 0; j < corr.size(); ++j)
      if (!selected[static_cast<std::size_t>(j)] &&
          std::abs(corr(j)) >= best - omp_detail::kTieTolerance)
        return j;
    return -1;
  }

  Matrix atoms_;
  Matrix gram_;
};

inline OmpResult omp_detailed(const Eigen::Ref<const Vector>& y, const Dictionary& D,
                              const StopRule& rule) {
  return OmpCoder(D).code(y, rule);
}

inline SparseVector omp_fixed_sparsity(const Eigen::Ref<const Vector>& y, const Dictionary& D,
                                       Index s) {
  return OmpCoder(D).code(y, FixedSparsity{s}).code;
}

inline SparseVector omp_error_bound(const Eigen::Ref<const Vector>& y, const Dictionary& D,
                                    double eps, Index s_max) {
  return OmpCoder(D).code(y, ErrorBound{eps, s_max}).code;
}

struct BatchDiagnostics {
  std::size_t singular_stops = 0;
  std::size_t cap_hits = 0;
};

/// Codes every column of Y. Columns are independent, so the result is the
/// same for any thread count.
inline SparseCodeMatrix omp_batch(const TrainingSet& Y, const Dictionary& D, const StopRule& rule,
                                  unsigned threads = 1, BatchDiagnostics* diagnostics = nullptr) {
  if (Y.cols() > 0 && Y.rows() != D.rows())
    throw InvalidInput("omp_batch: data dimension " + std::to_string(Y.rows()) +
                       " does not match dictionary dimension " + std::to_string(D.rows()));
  SparseCodeMatrix X(D.cols(), Y.cols());
  if (Y.cols() == 0) return X;
  const OmpCoder coder(D);
  std::vector<char> singular(static_cast<std::size_t>(Y.cols()), 0);
  std::vector<char> capped(static_cast<std::size_t>(Y.cols()), 0);
  parallel_blocks(static_cast<std::size_t>(Y.cols()), 256, threads,
                  [&](std::size_t begin, std::size_t end) {
                    OmpCoder::Workspace ws;
                    for (std::size_t i = begin; i < end; ++i) {
                      auto r = coder.code(Y.col(static_cast<Index>(i)), rule, ws);
                      singular[i] = r.diagnostics.singular_stop;
                      capped[i] = r.diagnostics.cap_hit;
                      X.col(static_cast<Index>(i)) = std::move(r.code);
                    }
                  });
  if (diagnostics) {
    diagnostics->singular_stops = static_cast<std::size_t>(std::count(singular.begin(), singular.end(), 1));
    diagnostics->cap_hits = static_cast<std::size_t>(std::count(capped.begin(), capped.end(), 1));
  }
  return X;
}

} // namespace sparsedict
