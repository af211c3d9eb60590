#pragma once

// Patch-based denoising: every p x p window of the noisy image is coded by
// error-bounded OMP (||y - D x|| <= eps_gain * sigma), the estimates D x are
// put back, and each pixel becomes the plain average of the estimates that
// cover it.

#include "sparsedict/core.hpp"
#include "sparsedict/image.hpp"
#include "sparsedict/parallel.hpp"
#include "sparsedict/random.hpp"
#include "sparsedict/sparse_coding.hpp"

#include <cstdint>
#include <vector>

namespace sparsedict {

struct DenoiseConfig {
  Index patch_size = 8;
  Index stride = 1;
  double sigma = 0.0;
  double eps_gain = 8.5;
  /// 0 means m = patch_size^2.
  Index s_max = 0;
  unsigned threads = 0;

  void validate() const {
    if (patch_size < 1) throw InvalidInput("denoise: patch size must be positive");
    if (stride < 1 || stride > patch_size) throw InvalidInput("denoise: need 1 <= stride <= patch size");
    if (!(sigma >= 0.0)) throw InvalidInput("denoise: sigma must be >= 0");
    if (!(eps_gain >= 0.0)) throw InvalidInput("denoise: eps_gain must be >= 0");
    if (s_max < 0 || s_max > patch_size * patch_size) throw InvalidInput("denoise: s_max out of range");
  }
};

/// Top-left offsets along one axis: 0, stride, 2 stride, ... plus len - p
/// when the grid would otherwise miss the far edge.
inline std::vector<Index> patch_offsets(Index len, Index p, Index stride) {
  if (p < 1 || p > len) throw InvalidInput("patch size must be between 1 and the image side");
  if (stride < 1) throw InvalidInput("patch stride must be positive");
  std::vector<Index> out;
  for (Index o = 0; o + p <= len; o += stride) out.push_back(o);
  if (out.back() != len - p) out.push_back(len - p);
  return out;
}

/// Column-major vectorization of the window at (row, col): entry r + p c.
inline void read_patch(const GrayImage& img, Index row, Index col, Index p, Eigen::Ref<Vector> out) {
  for (Index c = 0; c < p; ++c)
    for (Index r = 0; r < p; ++r) out(r + p * c) = img.at(row + r, col + c);
}

/// All windows, row offset major then column offset.
inline TrainingSet extract_patches(const GrayImage& img, Index p, Index stride = 1) {
  const auto rows = patch_offsets(img.height(), p, stride);
  const auto cols = patch_offsets(img.width(), p, stride);
  TrainingSet out(p * p, static_cast<Index>(rows.size() * cols.size()));
  Index k = 0;
  for (Index r : rows)
    for (Index c : cols) read_patch(img, r, c, p, out.col(k++));
  return out;
}

/// Number of windows covering each pixel.
inline GrayImage cover_counts(Index width, Index height, Index p, Index stride = 1) {
  GrayImage counts(width, height);
  for (Index r0 : patch_offsets(height, p, stride))
    for (Index c0 : patch_offsets(width, p, stride))
      for (Index c = 0; c < p; ++c)
        for (Index r = 0; r < p; ++r) counts.at(r0 + r, c0 + c) += 1.0;
  return counts;
}

/// Inverse of extract_patches: per-pixel mean of the patch values covering it.
inline GrayImage reconstruct_from_patches(const TrainingSet& patches, Index width, Index height, Index p,
                                          Index stride = 1) {
  const auto rows = patch_offsets(height, p, stride);
  const auto cols = patch_offsets(width, p, stride);
  if (patches.rows() != p * p || patches.cols() != static_cast<Index>(rows.size() * cols.size()))
    throw InvalidInput("reconstruct_from_patches: patch matrix does not match the extraction grid");
  GrayImage sum(width, height);
  GrayImage count(width, height);
  Index k = 0;
  for (Index r0 : rows)
    for (Index c0 : cols) {
      const auto v = patches.col(k++);
      for (Index c = 0; c < p; ++c)
        for (Index r = 0; r < p; ++r) {
          sum.at(r0 + r, c0 + c) += v(r + p * c);
          count.at(r0 + r, c0 + c) += 1.0;
        }
    }
  for (std::size_t i = 0; i < sum.size(); ++i) sum.pixels()[i] /= count.pixels()[i];
  return sum;
}

struct DenoiseStats {
  std::size_t patches = 0;
  std::size_t total_atoms = 0;
  std::size_t cap_hits = 0;
  double mean_atoms() const { return patches ? static_cast<double>(total_atoms) / static_cast<double>(patches) : 0.0; }
};

/// Returns the denoised image clamped to [0, 255]. Rows of patches are coded
/// in parallel batches and accumulated serially in row order, so the output
/// does not depend on the thread count.
inline GrayImage denoise_image(const GrayImage& noisy, const Dictionary& D, const DenoiseConfig& cfg,
                               DenoiseStats* stats = nullptr) {
  cfg.validate();
  const Index p = cfg.patch_size;
  const Index m = p * p;
  if (D.rows() != m)
    throw InvalidInput("denoise: dictionary has m = " + std::to_string(D.rows()) + ", patch size needs " +
                       std::to_string(m));
  const auto rows = patch_offsets(noisy.height(), p, cfg.stride);
  const auto cols = patch_offsets(noisy.width(), p, cfg.stride);
  const ErrorBound rule{cfg.eps_gain * cfg.sigma, cfg.s_max > 0 ? cfg.s_max : m};
  const OmpCoder coder(D);
  const unsigned threads = resolve_threads(cfg.threads);

  GrayImage sum(noisy.width(), noisy.height());
  GrayImage count(noisy.width(), noisy.height());
  DenoiseStats local;
  const std::size_t batch = std::max<std::size_t>(8, 4 * threads);
  const Index ncols = static_cast<Index>(cols.size());
  std::vector<Matrix> estimates(batch);
  std::vector<std::size_t> atoms_used(batch), caps(batch);

  for (std::size_t b0 = 0; b0 < rows.size(); b0 += batch) {
    const std::size_t nb = std::min(batch, rows.size() - b0);
    parallel_for(nb, threads, [&](std::size_t t) {
      Matrix& est = estimates[t];
      est.resize(m, ncols);
      atoms_used[t] = caps[t] = 0;
      Vector y(m);
      OmpCoder::Workspace ws;
      for (Index c = 0; c < ncols; ++c) {
        read_patch(noisy, rows[b0 + t], cols[static_cast<std::size_t>(c)], p, y);
        const auto r = coder.code(y, rule, ws);
        atoms_used[t] += r.code.nnz();
        caps[t] += r.diagnostics.cap_hit;
        est.col(c) = apply(D.atoms(), r.code);
      }
    });
    for (std::size_t t = 0; t < nb; ++t) {
      const Index r0 = rows[b0 + t];
      for (Index c = 0; c < ncols; ++c) {
        const Index c0 = cols[static_cast<std::size_t>(c)];
        const auto v = estimates[t].col(c);
        for (Index cc = 0; cc < p; ++cc)
          for (Index rr = 0; rr < p; ++rr) {
            sum.at(r0 + rr, c0 + cc) += v(rr + p * cc);
            count.at(r0 + rr, c0 + cc) += 1.0;
          }
      }
      local.patches += static_cast<std::size_t>(ncols);
      local.total_atoms += atoms_used[t];
      local.cap_hits += caps[t];
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i)
    sum.pixels()[i] = std::clamp(sum.pixels()[i] / count.pixels()[i], 0.0, 255.0);
  if (stats) *stats = local;
  return sum;
}

/// `count` random p x p patches from a set of images. Each draw picks an
/// image with probability proportional to its area, then a uniform window
/// position inside it. Draws are with replacement.
inline TrainingSet sample_patches(const std::vector<GrayImage>& images, Index count, Index p, std::uint64_t seed) {
  if (images.empty()) throw InvalidInput("sample_patches: no images");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& img : images) {
    if (img.width() < p || img.height() < p) throw InvalidInput("sample_patches: image smaller than patch");
    total += static_cast<double>(img.width() * img.height());
    cumulative.push_back(total);
  }
  Rng rng(seed);
  TrainingSet out(p * p, count);
  for (Index k = 0; k < count; ++k) {
    const double u = rng.uniform01() * total;
    const auto idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                              cumulative.begin());
    const auto& img = images[std::min(idx, images.size() - 1)];
    const auto r = static_cast<Index>(rng.index(static_cast<std::uint64_t>(img.height() - p + 1)));
    const auto c = static_cast<Index>(rng.index(static_cast<std::uint64_t>(img.width() - p + 1)));
    read_patch(img, r, c, p, out.col(k));
  }
  return out;
}

} // namespace sparsedict
