// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Detail lines start with "  ".

#include "oracles.hpp"

#include "sparsedict/sparsedict.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace sparsedict;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMasterSeed = 2024;
constexpr unsigned kPrimaryThreads = 8;
constexpr unsigned kRepeatThreads = 1;

std::vector<std::string> g_results;
bool g_all_pass = true;

void verdict(int id, bool pass, const std::string& summary) {
  std::ostringstream line;
  line << "C" << id << " " << (pass ? "PASS" : "FAIL") << ": " << summary;
  std::cout << line.str() << std::endl;
  g_results.push_back(line.str());
  g_all_pass = g_all_pass && pass;
}

template <class... Args>
void detail(Args&&... args) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  (s << ... << args);
  std::cout << "  " << s.str() << std::endl;
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "sparsedict_acceptance";
  fs::create_directories(dir);
  return dir;
}

// ------------------------------------------------------------------ C4

void criterion_composition() {
  Rng rng(derive_seed(kMasterSeed, 4));
  int failures = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index m = 1 + static_cast<Index>(rng.index(10));
    const Index K = 1 + static_cast<Index>(rng.index(16));
    const Index K1 = 1 + static_cast<Index>(rng.index(16));
    const Index s1 = 1 + static_cast<Index>(rng.index(static_cast<std::uint64_t>(K)));
    const Index s2 = 1 + static_cast<Index>(rng.index(static_cast<std::uint64_t>(K1)));
    const Matrix D = oracle::random_unit_columns(m, K, rng);
    Matrix Z = Matrix::Zero(K, K1);
    for (Index j = 0; j < K1; ++j)
      for (auto i : rng.sample_distinct(static_cast<std::size_t>(K), static_cast<std::size_t>(s1)))
        Z(static_cast<Index>(i), j) = rng.normal();
    const Matrix E = rng.uniform01() * oracle::random_gaussian(m, K1, rng);
    Vector x1 = Vector::Zero(K1);
    for (auto i : rng.sample_distinct(static_cast<std::size_t>(K1), static_cast<std::size_t>(s2)))
      x1(static_cast<Index>(i)) = rng.normal();
    const Vector e1 = rng.uniform01() * oracle::random_gaussian(m, 1, rng);
    const auto r = composition_bound_check(D, Z, E, x1, e1);
    if (!r.holds || !r.support_bound || r.composed_nnz > s1 * s2) ++failures;
    if (r.rhs > 0) worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
  }
  detail("max lhs/rhs over 1000 instances: ", worst_ratio);
  verdict(4, failures == 0, "composition bound and s1*s2 support bound, " + std::to_string(failures) +
                                " failures in 1000 instances");
}

// ------------------------------------------------------------------ C5

void criterion_omp_oracle() {
  Rng rng(derive_seed(kMasterSeed, 5));
  int exact_fail = 0;
  double worst_coef = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index s = 1 + static_cast<Index>(rng.index(3));
    const Index m = s + 1 + static_cast<Index>(rng.index(static_cast<std::uint64_t>(8 - s)));
    const Index K = m + static_cast<Index>(rng.index(8));
    const auto support = rng.sample_distinct(static_cast<std::size_t>(K), static_cast<std::size_t>(s));
    const Matrix Q = oracle::random_orthonormal(m, s, rng);
    const Matrix P = Matrix::Identity(m, m) - Q * Q.transpose();
    Matrix D(m, K);
    for (Index j = 0; j < K; ++j) {
      Vector v;
      do {
        v = P * oracle::random_gaussian(m, 1, rng);
      } while (v.norm() < 1e-3);
      D.col(j) = v.normalized();
    }
    Vector y = Vector::Zero(m);
    std::vector<double> coef(static_cast<std::size_t>(s));
    for (Index t = 0; t < s; ++t) {
      const auto idx = static_cast<Index>(support[static_cast<std::size_t>(t)]);
      D.col(idx) = Q.col(t);
      coef[static_cast<std::size_t>(t)] = (0.5 + rng.uniform01()) * (rng.index(2) ? 1.0 : -1.0);
      y += coef[static_cast<std::size_t>(t)] * Q.col(t);
    }
    const auto x = omp_fixed_sparsity(y, Dictionary(D), s);
    bool ok = x.nnz() == static_cast<std::size_t>(s);
    for (Index t = 0; t < s && ok; ++t) {
      const double err = std::abs(x[static_cast<Index>(support[static_cast<std::size_t>(t)])] -
                                  coef[static_cast<std::size_t>(t)]);
      worst_coef = std::max(worst_coef, err);
      ok = err <= 1e-10;
    }
    exact_fail += !ok;
  }

  int trace_fail = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.index(7));
    const Index K = 2 + static_cast<Index>(rng.index(15));
    const Dictionary D(oracle::random_unit_columns(m, K, rng));
    const Vector y = oracle::random_gaussian(m, 1, rng);
    const Index s = 1 + static_cast<Index>(rng.index(static_cast<std::uint64_t>(std::min(m, K))));
    const auto r = omp_detailed(y, D, FixedSparsity{s});
    const auto ref = oracle::naive_omp(D.atoms(), y, s, -1.0);
    bool ok = ref.steps.size() == r.diagnostics.selection_order.size() && !r.diagnostics.singular_stop;
    for (std::size_t k = 0; ok && k < ref.steps.size(); ++k) {
      ok = ref.steps[k].atom == r.diagnostics.selection_order[k] &&
           std::abs(ref.steps[k].residual_norm - r.diagnostics.residual_norms[k + 1]) <= 1e-9 * (1 + y.norm());
    }
    if (ok && !ref.steps.empty()) {
      const auto& last = ref.steps.back();
      for (std::size_t t = 0; t < ref.steps.size(); ++t)
        ok = ok && std::abs(r.code[r.diagnostics.selection_order[t]] - last.coefficients(static_cast<Index>(t))) <=
                       1e-9 * (1 + last.coefficients.norm());
    }
    trace_fail += !ok;
  }
  detail("orthonormal-support instances: max coefficient error ", worst_coef);
  verdict(5, exact_fail == 0 && trace_fail == 0,
          "OMP exact recovery " + std::to_string(200 - exact_fail) + "/200, naive trace match " +
              std::to_string(200 - trace_fail) + "/200");
}

// ------------------------------------------------------------------ C6

void criterion_mod_oracle() {
  Rng rng(derive_seed(kMasterSeed, 6));
  int solve_fail = 0;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.index(14));
    const Index K = 2 + static_cast<Index>(rng.index(20));
    const Index N = 3 * K + static_cast<Index>(rng.index(60));
    const Matrix Y = oracle::random_gaussian(m, N, rng);
    const Matrix X = oracle::random_gaussian(K, N, rng);
    const auto Xs = SparseCodeMatrix::from_dense(X);
    const Dictionary prev(oracle::random_unit_columns(m, K, rng));
    const auto upd = mod_update(Y, Xs, prev);
    // mod_update returns normalized atoms and the norms it divided by.
    const Matrix raw = upd.dictionary.atoms() * upd.scales.asDiagonal();
    const Matrix ref = oracle::normal_equation_dictionary(Y, X);
    const double rel = (raw - ref).norm() / ref.norm();
    worst_rel = std::max(worst_rel, rel);
    solve_fail += !(rel <= 1e-10);
  }

  int descent_fail = 0, steps = 0;
  double worst_increase = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 6 + static_cast<Index>(rng.index(10));
    const Index K = m + 2 + static_cast<Index>(rng.index(10));
    const Index s = 1 + static_cast<Index>(rng.index(3));
    const auto truth = gen_dictionary(m, K, rng.next());
    const auto data = gen_signals(truth, 20 * K, s, rng.next());
    Dictionary D = initial_dictionary(data.Y, K, InitKind::FirstColumns, std::nullopt, 0);
    for (int it = 0; it < 10; ++it, ++steps) {
      const auto X = omp_batch(data.Y, D, FixedSparsity{s}, 1);
      const double before = residual_frobenius(data.Y, D.atoms(), X);
      const auto upd = mod_update(data.Y, X, D);
      const double after = upd.diagnostics.residual_fro;
      worst_increase = std::max(worst_increase, (after - before) / std::max(before, 1e-300));
      // Exact-sparse data drives both sides to rounding level; allow a few ulps of ||Y||.
      const double floor = 64 * std::numeric_limits<double>::epsilon() * data.Y.norm();
      descent_fail += !(after <= before * (1 + 1e-9) + floor);
      D = replace_degenerate_atoms(upd.dictionary, data.Y, rescale_rows(X, upd.scales), rng.next()).dictionary;
    }
  }
  detail("normal-equation oracle: max relative Frobenius error ", worst_rel);
  detail("descent: worst relative change over ", steps, " alternating steps ", worst_increase);
  verdict(6, solve_fail == 0 && descent_fail == 0,
          "MOD matches normal equations " + std::to_string(200 - solve_fail) + "/200, descent holds " +
              std::to_string(steps - descent_fail) + "/" + std::to_string(steps));
}

// ------------------------------------------------------------------ C7

void criterion_pipeline_exactness(const Dictionary& some_dict, const TrainingSet& some_data) {
  const auto dir = scratch();
  const auto lenna = load_pgm(fs::path(SPARSEDICT_DATA_DIR) / "test" / "lenna.pgm");
  double worst = 0.0;
  for (Index stride : {1, 3, 8}) {
    const auto back = reconstruct_from_patches(extract_patches(lenna, 8, stride), lenna.width(), lenna.height(), 8,
                                               stride);
    for (std::size_t i = 0; i < lenna.size(); ++i)
      worst = std::max(worst, std::abs(back.pixels()[i] - lenna.pixels()[i]));
  }
  const bool patches_ok = worst <= 1e-10;

  save_pgm(lenna, dir / "lenna_copy.pgm");
  const bool pgm_ok = load_pgm(dir / "lenna_copy.pgm") == lenna &&
                      slurp(dir / "lenna_copy.pgm") == slurp(fs::path(SPARSEDICT_DATA_DIR) / "test" / "lenna.pgm");

  save_dictionary(some_dict, dir / "d.sdict");
  const auto d_back = load_dictionary(dir / "d.sdict");
  save_dictionary(d_back, dir / "d2.sdict");
  const bool dict_ok = d_back == some_dict && slurp(dir / "d.sdict") == slurp(dir / "d2.sdict");

  save_training_set(some_data, dir / "y.sdata");
  const auto y_back = load_training_set(dir / "y.sdata");
  const bool data_ok = y_back == some_data;

  detail("extract/reconstruct max abs error ", worst, "; PGM ", pgm_ok, ", SDICT ", dict_ok, ", SDATA ", data_ok);
  verdict(7, patches_ok && pgm_ok && dict_ok && data_ok, "patch round trip, PGM, SDICT and SDATA round trips exact");
}

// ------------------------------------------------------------------ C1, C2

struct SyntheticTrial {
  Dictionary truth;
  TrainingSet Y;
};

SyntheticTrial synthetic_trial(int t) {
  const std::uint64_t seed = derive_seed(kMasterSeed, 100 + static_cast<std::uint64_t>(t));
  auto D = gen_dictionary(30, 60, derive_seed(seed, 1));
  auto data = gen_signals(D, 40000, 6, derive_seed(seed, 2));
  return {std::move(D), std::move(data.Y)};
}

TrainConfig synthetic_standard(int t, unsigned threads) {
  TrainConfig cfg;
  cfg.K = 60;
  cfg.s = 6;
  cfg.iterations = 100;
  cfg.init = InitKind::FirstColumns;
  cfg.seed = derive_seed(kMasterSeed, 200 + static_cast<std::uint64_t>(t));
  cfg.threads = threads;
  return cfg;
}

TrainConfig synthetic_split(int t, unsigned threads) {
  auto cfg = synthetic_standard(t, threads);
  cfg.split_merge = SplitMergeParams{40, 50, 3, 2, 0, 0};
  return cfg;
}

struct SyntheticRuns {
  std::vector<Dictionary> standard, split;
  double std_rec = 0, std_mse = 0, sm_rec = 0, sm_mse = 0, std_time = 0, sm_time = 0;
};

SyntheticRuns run_synthetic(unsigned threads, bool verbose) {
  SyntheticRuns out;
  constexpr int trials = 5;
  for (int t = 0; t < trials; ++t) {
    const auto trial = synthetic_trial(t);
    const auto a = train_standard(trial.Y, synthetic_standard(t, threads));
    const auto b = train_split_merge(trial.Y, synthetic_split(t, threads));
    const double ra = atom_recovery(trial.truth, a.dictionary), rb = atom_recovery(trial.truth, b.dictionary);
    if (verbose)
      detail("trial ", t, ": standard ", fmt(ra), "% ", fmt(a.report.final_mse_db), " dB ",
             fmt(a.report.wall_time_s, 2), " s | split-merge ", fmt(rb), "% ", fmt(b.report.final_mse_db), " dB ",
             fmt(b.report.wall_time_s, 2), " s (locals ", fmt(b.report.locals_wall_time_s, 2), " s, merge ",
             fmt(b.report.merge_wall_time_s, 2), " s)");
    out.std_rec += ra / trials;
    out.sm_rec += rb / trials;
    out.std_mse += a.report.final_mse_db / trials;
    out.sm_mse += b.report.final_mse_db / trials;
    out.std_time += a.report.wall_time_s;
    out.sm_time += b.report.wall_time_s;
    out.standard.push_back(a.dictionary);
    out.split.push_back(b.dictionary);
  }
  return out;
}

// ------------------------------------------------------------------ C3

struct ImageRuns {
  Dictionary standard, split;
  std::vector<GrayImage> denoised_standard, denoised_split;
};

const std::array<double, 5> kSigmas = {10, 15, 20, 25, 50};

TrainingSet corpus_patches() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fs::path(SPARSEDICT_DATA_DIR) / "corpus"))
    if (e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> images;
  for (const auto& f : files) images.push_back(load_pgm(f));
  return sample_patches(images, 100000, 8, derive_seed(kMasterSeed, 300));
}

TrainConfig image_standard(unsigned threads) {
  TrainConfig cfg;
  cfg.K = 256;
  cfg.s = 8;
  cfg.iterations = 100;
  cfg.init = InitKind::OvercompleteDct;
  cfg.seed = derive_seed(kMasterSeed, 301);
  cfg.threads = threads;
  return cfg;
}

TrainConfig image_split(unsigned threads) {
  auto cfg = image_standard(threads);
  cfg.split_merge = SplitMergeParams{20, 128, 2, 4, 0, 0};
  return cfg;
}

ImageRuns run_images(const TrainingSet& patches, const GrayImage& lenna, unsigned threads, bool verbose,
                     bool& c3_pass, std::string& c3_summary) {
  ImageRuns out;
  const auto a = train_standard(patches, image_standard(threads));
  const auto b = train_split_merge(patches, image_split(threads));
  out.standard = a.dictionary;
  out.split = b.dictionary;
  if (verbose)
    detail("image training: standard ", fmt(a.report.wall_time_s, 1), " s (", fmt(a.report.final_mse_db),
           " dB), split-merge ", fmt(b.report.wall_time_s, 1), " s (", fmt(b.report.final_mse_db), " dB)");

  c3_pass = true;
  double psnr25 = 0, psnr25_sm = 0, worst_gain = 1e9, worst_gap = 0;
  for (double sigma : kSigmas) {
    const auto noisy = add_gaussian_noise(lenna, sigma, derive_seed(kMasterSeed, 400 + static_cast<std::uint64_t>(sigma)));
    DenoiseConfig dc;
    dc.sigma = sigma;
    dc.threads = threads;
    const auto out_a = denoise_image(noisy, a.dictionary, dc);
    const auto out_b = denoise_image(noisy, b.dictionary, dc);
    const double pin = psnr(lenna, noisy), pa = psnr(lenna, out_a), pb = psnr(lenna, out_b);
    if (verbose)
      detail("sigma ", fmt(sigma, 0), ": input ", fmt(pin), " dB, standard ", fmt(pa), " dB, split-merge ", fmt(pb),
             " dB");
    worst_gain = std::min({worst_gain, pa - pin, pb - pin});
    worst_gap = std::max(worst_gap, std::abs(pa - pb));
    if (sigma == 25) {
      psnr25 = pa;
      psnr25_sm = pb;
    }
    out.denoised_standard.push_back(out_a);
    out.denoised_split.push_back(out_b);
  }
  c3_pass = psnr25 >= 30.0 && psnr25_sm >= 30.0 && worst_gain >= 5.0 && worst_gap <= 0.5;
  c3_summary = "Lenna sigma 25: " + fmt(psnr25) + " / " + fmt(psnr25_sm) + " dB (need >= 30), min gain " +
               fmt(worst_gain) + " dB (need >= 5), max standard vs split-merge gap " + fmt(worst_gap) +
               " dB (need <= 0.5)";
  return out;
}

} // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  std::cout << "hardware threads: " << std::thread::hardware_concurrency() << ", primary runs use "
            << kPrimaryThreads << ", repeat runs use " << kRepeatThreads << std::endl;

  criterion_composition();
  criterion_omp_oracle();
  criterion_mod_oracle();

  // C1 and C2
  std::cout << "synthetic runs (threads " << kPrimaryThreads << ")" << std::endl;
  const auto syn = run_synthetic(kPrimaryThreads, true);
  verdict(1,
          syn.std_rec >= 90.0 && syn.std_mse <= -18.0 && syn.sm_rec >= 78.0 && syn.sm_mse <= -13.0,
          "standard " + fmt(syn.std_rec) + "% / " + fmt(syn.std_mse) + " dB (need >= 90, <= -18), split-merge " +
              fmt(syn.sm_rec) + "% / " + fmt(syn.sm_mse) + " dB (need >= 78, <= -13), mean of 5 trials");
  const double speedup = syn.std_time / syn.sm_time;
  verdict(2, speedup >= 5.0,
          "split-merge speedup " + fmt(speedup) + "x over 5 trials (standard " + fmt(syn.std_time, 1) +
              " s, split-merge " + fmt(syn.sm_time, 1) + " s; need >= 5x)");

  // C3
  const auto lenna = load_pgm(fs::path(SPARSEDICT_DATA_DIR) / "test" / "lenna.pgm");
  const auto patches = corpus_patches();
  std::cout << "image runs (threads " << kPrimaryThreads << ")" << std::endl;
  bool c3_pass = false;
  std::string c3_summary;
  const auto img = run_images(patches, lenna, kPrimaryThreads, true, c3_pass, c3_summary);
  verdict(3, c3_pass, c3_summary);

  criterion_pipeline_exactness(syn.standard.front(), synthetic_trial(0).Y);

  // C8: same seeds, other thread count.
  std::cout << "repeat runs (threads " << kRepeatThreads << ")" << std::endl;
  const auto syn2 = run_synthetic(kRepeatThreads, false);
  bool same = syn.standard == syn2.standard && syn.split == syn2.split;
  detail("synthetic dictionaries identical: ", same ? "yes" : "no");
  bool dummy = false;
  std::string dummy_summary;
  const auto img2 = run_images(patches, lenna, kRepeatThreads, false, dummy, dummy_summary);
  const bool img_same = img.standard == img2.standard && img.split == img2.split &&
                        img.denoised_standard == img2.denoised_standard && img.denoised_split == img2.denoised_split;
  detail("image dictionaries and denoised images identical: ", img_same ? "yes" : "no");
  verdict(8, same && img_same,
          "criteria 1 and 3 reruns bit-identical under threads " + std::to_string(kPrimaryThreads) + " and " +
              std::to_string(kRepeatThreads));

  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "\nsummary (" << fmt(total, 0) << " s)" << std::endl;
  std::sort(g_results.begin(), g_results.end());
  for (const auto& r : g_results) std::cout << r << std::endl;
  return g_all_pass ? 0 : 1;
}
