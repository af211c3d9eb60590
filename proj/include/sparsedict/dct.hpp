#pragma once

#include "sparsedict/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace sparsedict {

/// q oversampled 1-D cosine vectors of length p, one per column:
/// V(i, k) = cos(pi k i / q), mean removed for k > 0, unit norm.
inline Matrix cosine_basis_1d(Index p, Index q) {
  Matrix V(p, q);
  for (Index k = 0; k < q; ++k) {
    for (Index i = 0; i < p; ++i)
      V(i, k) = std::cos(std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(q));
    if (k > 0) V.col(k).array() -= V.col(k).mean();
    V.col(k).normalize();
  }
  return V;
}

/// Separable overcomplete DCT for p x p patches with K = q^2 atoms. Atom
/// (k, l) is the patch V_k V_l^T (k indexes rows, l columns), vectorized
/// column-major like extract_patches, and stored at column k + q * l.
inline Dictionary overcomplete_dct(Index p, Index K) {
  if (p < 1) throw InvalidInput("overcomplete_dct: patch size must be positive");
  const auto q = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(K))));
  if (K < 1 || q * q != K) throw InvalidInput("overcomplete_dct: K must be a perfect square");
  if (q < p) throw InvalidInput("overcomplete_dct: need sqrt(K) >= p");
  const Matrix V = cosine_basis_1d(p, q);
  Matrix D(p * p, K);
  for (Index l = 0; l < q; ++l)
    for (Index k = 0; k < q; ++k) {
      auto atom = D.col(k + q * l);
      for (Index c = 0; c < p; ++c)
        for (Index r = 0; r < p; ++r) atom(r + p * c) = V(r, k) * V(c, l);
      atom.normalize();
    }
  return Dictionary(std::move(D));
}

/// K1 atoms of the K-atom overcomplete DCT, lowest total frequency k + l
/// first (ties by column index). Used where the atom count is not a square.
inline Dictionary overcomplete_dct_subset(Index p, Index K, Index K1) {
  const Dictionary full = overcomplete_dct(p, K);
  if (K1 < 1 || K1 > K) throw InvalidInput("overcomplete_dct_subset: need 1 <= K1 <= K");
  const Index q = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(K))));
  std::vector<Index> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [q](Index a, Index b) {
    return (a % q + a / q) < (b % q + b / q);
  });
  order.resize(static_cast<std::size_t>(K1));
  std::sort(order.begin(), order.end());
  Matrix D(full.rows(), K1);
  for (Index j = 0; j < K1; ++j) D.col(j) = full.atom(order[static_cast<std::size_t>(j)]);
  return Dictionary(std::move(D));
}

} // namespace sparsedict
