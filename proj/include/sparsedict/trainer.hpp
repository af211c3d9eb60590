#pragma once

// Dictionary training: the whole-dataset alternating loop (OMP coding, MOD
// update, degenerate-atom replacement) and the split-and-merge variant,
// which trains local dictionaries on disjoint random shards in parallel and
// then learns the global dictionary from the stacked local atoms, each
// local dictionary weighted by the Frobenius norm of its codes.

#include "sparsedict/core.hpp"
#include "sparsedict/dct.hpp"
#include "sparsedict/dictionary_update.hpp"
#include "sparsedict/metrics.hpp"
#include "sparsedict/parallel.hpp"
#include "sparsedict/random.hpp"
#include "sparsedict/sparse_coding.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparsedict {

enum class InitKind { FirstColumns, OvercompleteDct, ExplicitMatrix };

inline const char* to_string(InitKind k) {
  switch (k) {
  case InitKind::FirstColumns: return "first-columns";
  case InitKind::OvercompleteDct: return "overcomplete-dct";
  case InitKind::ExplicitMatrix: return "explicit-matrix";
  }
  return "?";
}

struct SplitMergeParams {
  Index L = 1;
  Index K1 = 1;
  Index s1 = 1;
  Index s2 = 1;
  /// 0 means "same as TrainConfig::iterations".
  Index local_iterations = 0;
  Index merge_iterations = 0;
};

struct TrainConfig {
  Index K = 0;
  Index s = 1;
  Index iterations = 100;
  InitKind init = InitKind::FirstColumns;
  /// Starting atoms for InitKind::ExplicitMatrix.
  std::optional<Dictionary> init_dictionary;
  std::uint64_t seed = 0;
  /// Present for split-and-merge training.
  std::optional<SplitMergeParams> split_merge;
  /// Worker threads; 0 resolves via resolve_threads(). Never affects results.
  unsigned threads = 0;

  Index local_iterations() const {
    return split_merge && split_merge->local_iterations > 0 ? split_merge->local_iterations : iterations;
  }
  Index merge_iterations() const {
    return split_merge && split_merge->merge_iterations > 0 ? split_merge->merge_iterations : iterations;
  }

  void validate() const {
    if (K < 1) throw InvalidInput("config: K must be positive");
    if (s < 1) throw InvalidInput("config: s must be positive");
    if (iterations < 0) throw InvalidInput("config: iterations must be >= 0");
    if (init == InitKind::ExplicitMatrix && !init_dictionary)
      throw InvalidInput("config: explicit-matrix init needs a dictionary");
    if (split_merge) {
      const auto& p = *split_merge;
      if (p.L < 1) throw InvalidInput("config: L must be >= 1");
      if (p.K1 < 1 || p.K1 > K) throw InvalidInput("config: need 1 <= K1 <= K");
      if (p.s1 < 1 || p.s2 < 1) throw InvalidInput("config: s1 and s2 must be positive");
      if (p.s1 * p.s2 != s)
        throw InvalidInput("config: s1 * s2 must equal s (" + std::to_string(p.s1) + " * " +
                           std::to_string(p.s2) + " != " + std::to_string(s) + ")");
      if (p.local_iterations < 0 || p.merge_iterations < 0)
        throw InvalidInput("config: iteration counts must be >= 0");
    }
  }
};

struct TrainReport {
  double final_mse_db = 0.0;
  /// ||Y - D X||_F after each dictionary update (before normalization).
  std::vector<double> residuals;
  /// Training wall time. For split-and-merge: split + locals + merge.
  double wall_time_s = 0.0;
  /// Time spent computing the final codes and MSE; not part of wall_time_s.
  double eval_time_s = 0.0;
  double split_time_s = 0.0;
  std::vector<double> local_wall_times_s;
  double locals_wall_time_s = 0.0;
  double merge_wall_time_s = 0.0;
  std::size_t replaced_atoms = 0;
  /// Locals dropped from the merge because their codes were all zero.
  std::vector<Index> dropped_locals;
};

namespace trainer_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stream ids for derive_seed.
inline constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
inline constexpr std::uint64_t kMergeStream = 0x6d65726765ULL;
inline constexpr std::uint64_t kLocalStreamBase = 0x6c6f63616c000000ULL;
inline constexpr std::uint64_t kInitStream = 0x696e6974ULL;

inline Index patch_side(Index m) {
  const auto p = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(m))));
  if (p * p != m) throw InvalidInput("overcomplete-dct init needs a square signal dimension");
  return p;
}

} // namespace trainer_detail

/// Starting dictionary for K atoms over data Y. `dct_reference_K` is the
/// atom count of the full DCT from which a non-square K takes its subset.
inline Dictionary initial_dictionary(const TrainingSet& Y, Index K, InitKind init,
                                     const std::optional<Dictionary>& explicit_dict, std::uint64_t seed,
                                     Index dct_reference_K = 0) {
  switch (init) {
  case InitKind::FirstColumns: {
    if (Y.cols() < K)
      throw InvalidInput("first-columns init needs N >= K (N = " + std::to_string(Y.cols()) +
                         ", K = " + std::to_string(K) + ")");
    auto norm = normalize_columns(Y.leftCols(K));
    Rng rng(derive_seed(seed, trainer_detail::kInitStream));
    for (Index j = 0; j < K; ++j) {
      if (norm.scales(j) > 0.0) continue;
      Vector v(Y.rows());
      do {
        for (Index r = 0; r < v.size(); ++r) v(r) = rng.normal();
      } while (v.norm() == 0.0);
      norm.atoms.col(j) = v.normalized();
    }
    return Dictionary(std::move(norm.atoms));
  }
  case InitKind::OvercompleteDct: {
    const Index p = trainer_detail::patch_side(Y.rows());
    const auto q = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(K))));
    if (q * q == K) return overcomplete_dct(p, K);
    Index ref = dct_reference_K;
    if (ref < K) {
      Index r = p;
      while (r * r < K) ++r;
      ref = r * r;
    }
    return overcomplete_dct_subset(p, ref, K);
  }
  case InitKind::ExplicitMatrix:
    if (!explicit_dict) throw InvalidInput("explicit-matrix init needs a dictionary");
    if (explicit_dict->rows() != Y.rows() || explicit_dict->cols() != K)
      throw InvalidInput("explicit init dictionary has the wrong shape");
    return *explicit_dict;
  }
  throw InvalidInput("unknown init kind");
}

struct TrainResult {
  Dictionary dictionary;
  SparseCodeMatrix codes;
  TrainReport report;
};

/// Alternating minimization from a given start: `iterations` rounds of
/// {OMP with sparsity s, MOD update, degenerate-atom replacement}, then the
/// final codes for the returned dictionary.
inline TrainResult train_from(const TrainingSet& Y, Dictionary D, Index s, Index iterations,
                              std::uint64_t seed, unsigned threads) {
  using namespace trainer_detail;
  if (D.rows() != Y.rows()) throw InvalidInput("training data and dictionary dimensions differ");
  if (s < 1 || s > std::min(D.rows(), D.cols()))
    throw InvalidInput("sparsity must satisfy 1 <= s <= min(m, K)");
  TrainResult out;
  const auto t0 = Clock::now();
  for (Index it = 0; it < iterations; ++it) {
    const SparseCodeMatrix X = omp_batch(Y, D, FixedSparsity{s}, threads);
    auto mod = mod_update(Y, X, D);
    out.report.residuals.push_back(mod.diagnostics.residual_fro);
    if (degenerate_atoms(mod.dictionary.atoms(), X).empty()) {
      D = std::move(mod.dictionary);
      continue;
    }
    auto rep = replace_degenerate_atoms(mod.dictionary, Y, rescale_rows(X, mod.scales),
                                        derive_seed(seed, static_cast<std::uint64_t>(it)));
    out.report.replaced_atoms += rep.replaced.size();
    D = std::move(rep.dictionary);
  }
  out.report.wall_time_s = seconds_since(t0);
  const auto t1 = Clock::now();
  out.codes = omp_batch(Y, D, FixedSparsity{s}, threads);
  out.report.final_mse_db = Y.norm() > 0.0 ? mse_db(Y, D, out.codes) : -kDecibelCap;
  out.report.eval_time_s = seconds_since(t1);
  out.dictionary = std::move(D);
  return out;
}

inline TrainResult train_standard(const TrainingSet& Y, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.split_merge) throw InvalidInput("train_standard: config is in split-merge mode");
  if (!Y.allFinite()) throw InvalidInput("training data contains non-finite values");
  Dictionary D0 = initial_dictionary(Y, cfg.K, cfg.init, cfg.init_dictionary, cfg.seed);
  return train_from(Y, std::move(D0), cfg.s, cfg.iterations, cfg.seed, resolve_threads(cfg.threads));
}

/// Column indices of each shard: a seeded permutation cut into L consecutive
/// blocks, the first N mod L blocks one column longer.
inline std::vector<std::vector<Index>> split_indices(Index N, Index L, std::uint64_t seed) {
  if (L < 1) throw InvalidInput("split: L must be >= 1");
  if (L > N) throw InvalidInput("split: L = " + std::to_string(L) + " exceeds N = " + std::to_string(N));
  Rng rng(seed);
  const auto perm = rng.permutation(static_cast<std::size_t>(N));
  std::vector<std::vector<Index>> blocks(static_cast<std::size_t>(L));
  const Index base = N / L, extra = N % L;
  std::size_t pos = 0;
  for (Index t = 0; t < L; ++t) {
    const Index size = base + (t < extra ? 1 : 0);
    auto& b = blocks[static_cast<std::size_t>(t)];
    b.reserve(static_cast<std::size_t>(size));
    for (Index k = 0; k < size; ++k) b.push_back(static_cast<Index>(perm[pos++]));
  }
  return blocks;
}

inline std::vector<TrainingSet> split_dataset(const TrainingSet& Y, Index L, std::uint64_t seed) {
  const auto blocks = split_indices(Y.cols(), L, seed);
  std::vector<TrainingSet> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) {
    TrainingSet part(Y.rows(), static_cast<Index>(b.size()));
    for (std::size_t k = 0; k < b.size(); ++k) part.col(static_cast<Index>(k)) = Y.col(b[k]);
    out.push_back(std::move(part));
  }
  return out;
}

struct LocalModel {
  Dictionary dictionary;
  SparseCodeMatrix codes;
};

/// One shard: the standard loop with (K1, s1). Runs single-threaded, the
/// parallelism is across shards.
inline LocalModel train_local(const TrainingSet& Yt, Index K1, Index s1, Index iterations, std::uint64_t seed,
                              InitKind init = InitKind::FirstColumns, Index dct_reference_K = 0) {
  if (init == InitKind::ExplicitMatrix) throw InvalidInput("train_local: explicit init is not supported");
  Dictionary D0 = initial_dictionary(Yt, K1, init, std::nullopt, seed, dct_reference_K);
  auto r = train_from(Yt, std::move(D0), s1, iterations, seed, 1);
  return {std::move(r.dictionary), std::move(r.codes)};
}

/// Stacks ||X_t||_F D_t for every local and returns the scaled atoms along
/// with the indices of locals dropped for having all-zero codes.
inline std::pair<TrainingSet, std::vector<Index>> merge_training_set(const std::vector<LocalModel>& locals) {
  if (locals.empty()) throw InvalidInput("merge: no local dictionaries");
  const Index m = locals.front().dictionary.rows();
  Index cols = 0;
  std::vector<Index> dropped;
  std::vector<double> weight(locals.size());
  for (std::size_t t = 0; t < locals.size(); ++t) {
    if (locals[t].dictionary.rows() != m) throw InvalidInput("merge: local dictionaries differ in m");
    weight[t] = locals[t].codes.frobenius_norm();
    if (weight[t] == 0.0)
      dropped.push_back(static_cast<Index>(t));
    else
      cols += locals[t].dictionary.cols();
  }
  TrainingSet Yt(m, cols);
  Index c = 0;
  for (std::size_t t = 0; t < locals.size(); ++t) {
    if (weight[t] == 0.0) continue;
    const Index k = locals[t].dictionary.cols();
    Yt.middleCols(c, k) = weight[t] * locals[t].dictionary.atoms();
    c += k;
  }
  return {std::move(Yt), std::move(dropped)};
}

struct MergeResult {
  Dictionary dictionary;
  std::vector<Index> dropped_locals;
  TrainReport report;
};

inline MergeResult merge_dictionaries(const std::vector<LocalModel>& locals, Index K, Index s2,
                                      Index merge_iterations, std::uint64_t seed,
                                      InitKind init = InitKind::FirstColumns, unsigned threads = 1) {
  auto [Yt, dropped] = merge_training_set(locals);
  if (Yt.cols() == 0) throw InvalidInput("merge: every local has all-zero codes");
  Dictionary D0 = initial_dictionary(Yt, K, init, std::nullopt, seed);
  auto r = train_from(Yt, std::move(D0), s2, merge_iterations, seed, threads);
  return {std::move(r.dictionary), std::move(dropped), std::move(r.report)};
}

/// Split-and-merge training. The returned report's final_mse_db codes the
/// full data Y over the global dictionary with sparsity s = s1 s2.
inline TrainResult train_split_merge(const TrainingSet& Y, const TrainConfig& cfg) {
  using namespace trainer_detail;
  cfg.validate();
  if (!cfg.split_merge) throw InvalidInput("train_split_merge: config is in standard mode");
  if (cfg.init == InitKind::ExplicitMatrix)
    throw InvalidInput("train_split_merge: explicit-matrix init is not supported");
  if (!Y.allFinite()) throw InvalidInput("training data contains non-finite values");
  const auto& p = *cfg.split_merge;
  const unsigned threads = resolve_threads(cfg.threads);

  TrainResult out;
  const auto t0 = Clock::now();
  const auto shards = split_dataset(Y, p.L, derive_seed(cfg.seed, kSplitStream));
  out.report.split_time_s = seconds_since(t0);

  const auto t1 = Clock::now();
  std::vector<std::optional<LocalModel>> slots(shards.size());
  out.report.local_wall_times_s.assign(shards.size(), 0.0);
  parallel_for(shards.size(), threads, [&](std::size_t t) {
    const auto ts = Clock::now();
    slots[t] = train_local(shards[t], p.K1, p.s1, cfg.local_iterations(),
                           derive_seed(cfg.seed, kLocalStreamBase + t), cfg.init, cfg.K);
    out.report.local_wall_times_s[t] = seconds_since(ts);
  });
  out.report.locals_wall_time_s = seconds_since(t1);
  std::vector<LocalModel> locals;
  locals.reserve(slots.size());
  for (auto& s : slots) locals.push_back(std::move(*s));

  const auto t2 = Clock::now();
  auto merged = merge_dictionaries(locals, cfg.K, p.s2, cfg.merge_iterations(),
                                   derive_seed(cfg.seed, kMergeStream), cfg.init, threads);
  out.report.merge_wall_time_s = seconds_since(t2);
  out.report.wall_time_s = seconds_since(t0);
  out.report.residuals = merged.report.residuals;
  out.report.replaced_atoms = merged.report.replaced_atoms;
  out.report.dropped_locals = merged.dropped_locals;

  const auto t3 = Clock::now();
  out.codes = omp_batch(Y, merged.dictionary, FixedSparsity{cfg.s}, threads);
  out.report.final_mse_db = Y.norm() > 0.0 ? mse_db(Y, merged.dictionary, out.codes) : -kDecibelCap;
  out.report.eval_time_s = seconds_since(t3);
  out.dictionary = std::move(merged.dictionary);
  return out;
}

/// Dispatches on cfg.split_merge.
inline TrainResult train(const TrainingSet& Y, const TrainConfig& cfg) {
  return cfg.split_merge ? train_split_merge(Y, cfg) : train_standard(Y, cfg);
}

} // namespace sparsedict
