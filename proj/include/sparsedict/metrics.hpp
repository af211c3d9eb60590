#pragma once

#include "sparsedict/core.hpp"
#include "sparsedict/image.hpp"

#include <cmath>

namespace sparsedict {

inline constexpr double kDecibelCap = 300.0;

/// 20 log10(||Y - D X||_F / ||Y||_F), floored at -300 dB.
inline double mse_db(const TrainingSet& Y, const Matrix& D, const SparseCodeMatrix& X) {
  const double denom = Y.norm();
  if (denom == 0.0) throw InvalidInput("mse_db: ||Y||_F is zero");
  const double ratio = residual_frobenius(Y, D, X) / denom;
  if (ratio == 0.0) return -kDecibelCap;
  return std::max(-kDecibelCap, 20.0 * std::log10(ratio));
}

inline double mse_db(const TrainingSet& Y, const Dictionary& D, const SparseCodeMatrix& X) {
  return mse_db(Y, D.atoms(), X);
}

/// Percentage of true atoms d_i with max_j |<d_i, dhat_j>| >= threshold.
/// An estimated atom may account for several true atoms.
inline double atom_recovery(const Matrix& truth, const Matrix& estimate, double threshold = 0.98) {
  if (truth.rows() != estimate.rows()) throw InvalidInput("atom_recovery: signal dimensions differ");
  if (truth.cols() == 0) return 0.0;
  const Matrix C = (truth.transpose() * estimate).cwiseAbs();
  Index hits = 0;
  for (Index i = 0; i < truth.cols(); ++i)
    if (estimate.cols() > 0 && C.row(i).maxCoeff() >= threshold) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(truth.cols());
}

inline double atom_recovery(const Dictionary& truth, const Dictionary& estimate, double threshold = 0.98) {
  return atom_recovery(truth.atoms(), estimate.atoms(), threshold);
}

/// 20 log10(255 / RMSE); identical images give +300 dB.
inline double psnr(const GrayImage& reference, const GrayImage& test) {
  if (reference.width() != test.width() || reference.height() != test.height())
    throw InvalidInput("psnr: image dimensions differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference.pixels()[i] - test.pixels()[i];
    acc += d * d;
  }
  if (acc == 0.0) return kDecibelCap;
  const double rmse = std::sqrt(acc / static_cast<double>(reference.size()));
  return std::min(kDecibelCap, 20.0 * std::log10(255.0 / rmse));
}

// Per-iteration cost model of the standard and split-and-merge trainers,
// in units of the unknown machine constant (set to 1). Only ratios mean
// anything.

struct CostParams {
  double N = 0, m = 0, K = 0, s = 0, L = 1, K1 = 0, s1 = 0, s2 = 0;

  void validate() const {
    for (double v : {N, m, K, s, L, K1, s1, s2})
      if (!(v >= 1.0)) throw InvalidInput("cost parameters must be positive integers");
    if (s != s1 * s2) throw InvalidInput("cost parameters: s must equal s1 * s2");
  }

  /// K1 L and N / L within a factor of 4 of each other.
  bool same_order() const {
    const double a = K1 * L, b = N / L;
    return std::max(a, b) <= 4.0 * std::min(a, b);
  }
};

struct CostPrediction {
  double T1 = 0;
  double T2 = 0;
  double T_total = 0;
  bool same_order = false;
  double ratio() const { return T_total / T1; }
};

inline CostPrediction predict_costs(const CostParams& p) {
  p.validate();
  CostPrediction c;
  c.T1 = p.N * (p.K * p.s * p.m + p.m * p.m + p.N * p.N);
  const double n = p.N / p.L;
  c.T2 = n * (p.K1 * p.s1 * p.m + p.m * p.m + n * n);
  const double merged = p.K1 * p.L;
  c.T_total = p.N * (p.K1 * p.s1 * p.m + p.m * p.m + n * n) +
              merged * (p.K * p.s2 * p.m + p.m * p.m + merged * merged);
  c.same_order = p.same_order();
  return c;
}

} // namespace sparsedict
