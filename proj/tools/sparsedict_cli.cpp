// sparsedict command-line tool: gen | patches | train | denoise | noise | eval | bench

#include "sparsedict/sparsedict.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sparsedict;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw CliError(what + " not found: " + p.string());
}

// Creates the directory and proves it is writable before any compute starts.
void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw CliError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".sparsedict_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw CliError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw CliError("cannot write " + p.string());
  out << text;
  if (!out) throw CliError("write failed: " + p.string());
}

struct Manifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  Json config = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  void write(const fs::path& dir) const {
    Json j{{"command", command},
           {"config_path", config_path.empty() ? Json(nullptr) : Json(config_path)},
           {"config", config},
           {"seed", seed},
           {"threads", threads},
           {"inputs", inputs},
           {"outputs", outputs},
           {"version", kVersion},
           {"timestamp", utc_timestamp()}};
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }
};

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = ".";
};

void add_common(CLI::App* app, Common& c, bool with_config) {
  if (with_config) app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--seed", c.seed, "Master seed (default 0)");
  app->add_option("--threads", c.threads, "Worker threads (default: SPARSEDICT_THREADS or all cores)");
  app->add_option("--out", c.out, "Output directory");
}

// ---------------------------------------------------------------- gen

struct GenOpts {
  Common common;
  Index m = 30, K = 60, N = 40000, s = 6;
};

int run_gen(const GenOpts& o) {
  SyntheticSpec spec{o.m, o.K, o.N, o.s, o.common.seed};
  Json cfg_json{{"m", o.m}, {"K", o.K}, {"N", o.N}, {"s", o.s}};
  if (!o.common.config.empty()) {
    require_file(o.common.config, "config");
    const Json j = read_json_file(o.common.config);
    config_detail::reject_unknown(j, {"m", "K", "N", "s", "seed"}, "gen config");
    spec.m = config_detail::get_or<Index>(j, "m", spec.m, "gen config");
    spec.K = config_detail::get_or<Index>(j, "K", spec.K, "gen config");
    spec.N = config_detail::get_or<Index>(j, "N", spec.N, "gen config");
    spec.s = config_detail::get_or<Index>(j, "s", spec.s, "gen config");
    spec.seed = config_detail::get_or<std::uint64_t>(j, "seed", spec.seed, "gen config");
    cfg_json = {{"m", spec.m}, {"K", spec.K}, {"N", spec.N}, {"s", spec.s}};
  }
  spec.validate();
  const fs::path dir = o.common.out;
  prepare_out_dir(dir);

  const auto D = gen_dictionary(spec.m, spec.K, derive_seed(spec.seed, 1));
  const auto data = gen_signals(D, spec.N, spec.s, derive_seed(spec.seed, 2));
  save_dictionary(D, dir / "truth.sdict");
  save_training_set(data.Y, dir / "data.sdata");
  save_codes(data.X, dir / "truth.scode");

  Manifest man{"gen", o.common.config, spec.seed, 0, cfg_json, {}, {}};
  for (const char* f : {"truth.sdict", "data.sdata", "truth.scode"}) man.outputs.push_back((dir / f).string());
  man.write(dir);
  std::cout << "wrote " << spec.m << "x" << spec.K << " dictionary and " << spec.m << "x" << spec.N
            << " training set to " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- patches

struct PatchOpts {
  Common common;
  std::string corpus;
  Index count = 100000;
  Index patch = 8;
};

int run_patches(const PatchOpts& o) {
  if (!fs::is_directory(o.corpus)) throw CliError("corpus directory not found: " + o.corpus);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.corpus))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw CliError("no .pgm files in " + o.corpus);
  if (o.count < 1 || o.patch < 1) throw CliError("--count and --patch must be positive");
  const fs::path dir = o.common.out;
  prepare_out_dir(dir);

  std::vector<GrayImage> images;
  for (const auto& f : files) images.push_back(load_pgm(f));
  const auto Y = sample_patches(images, o.count, o.patch, o.common.seed);
  save_training_set(Y, dir / "patches.sdata");

  Manifest man{"patches", "", o.common.seed, 0, {{"count", o.count}, {"patch", o.patch}}, {}, {}};
  for (const auto& f : files) man.inputs.push_back(f.string());
  man.outputs.push_back((dir / "patches.sdata").string());
  man.write(dir);
  std::cout << "sampled " << o.count << " patches of " << o.patch << "x" << o.patch << " from " << files.size()
            << " images\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  Common common;
  std::string data;
  bool seed_given = false;
};

int run_train(const TrainOpts& o) {
  if (o.common.config.empty()) throw CliError("train needs --config");
  require_file(o.common.config, "config");
  require_file(o.data, "training data");
  TrainConfig cfg = load_train_config(o.common.config);
  if (o.seed_given) cfg.seed = o.common.seed;
  cfg.threads = resolve_threads(o.common.threads);
  const fs::path dir = o.common.out;
  prepare_out_dir(dir);

  const TrainingSet Y = load_training_set(o.data);
  if (cfg.init == InitKind::ExplicitMatrix && cfg.init_dictionary->rows() != Y.rows())
    throw CliError("init dictionary has m = " + std::to_string(cfg.init_dictionary->rows()) + " but " + o.data +
                   " has m = " + std::to_string(Y.rows()));
  const auto result = train(Y, cfg);
  save_dictionary(result.dictionary, dir / "dictionary.sdict");
  save_codes(result.codes, dir / "codes.scode");
  write_text(dir / "report.json", to_json(result.report).dump(2) + "\n");

  Manifest man{"train", o.common.config, cfg.seed, cfg.threads, to_json(cfg), {o.data}, {}};
  for (const char* f : {"dictionary.sdict", "codes.scode", "report.json"}) man.outputs.push_back((dir / f).string());
  man.write(dir);
  std::cout << std::fixed << std::setprecision(3) << "mode " << (cfg.split_merge ? "split-merge" : "standard")
            << "  wall " << result.report.wall_time_s << " s  final MSE " << result.report.final_mse_db << " dB\n";
  return 0;
}

// ---------------------------------------------------------------- noise

struct NoiseOpts {
  Common common;
  std::string input;
  double sigma = 0.0;
};

int run_noise(const NoiseOpts& o) {
  require_file(o.input, "input image");
  if (!(o.sigma >= 0.0)) throw CliError("--sigma must be >= 0");
  const fs::path dir = o.common.out;
  prepare_out_dir(dir);
  const auto clean = load_pgm(o.input);
  const auto noisy = add_gaussian_noise(clean, o.sigma, o.common.seed);
  save_pgm(noisy, dir / "noisy.pgm");
  Manifest man{"noise", "", o.common.seed, 0, {{"sigma", o.sigma}}, {o.input}, {(dir / "noisy.pgm").string()}};
  man.write(dir);
  std::cout << std::fixed << std::setprecision(2) << "PSNR noisy " << psnr(clean, load_pgm(dir / "noisy.pgm"))
            << " dB\n";
  return 0;
}

// ---------------------------------------------------------------- denoise

struct DenoiseOpts {
  Common common;
  std::string noisy, dict, reference;
  double sigma = -1.0;
  double gain = 8.5;
  Index patch = 8;
  Index stride = 1;
};

int run_denoise(const DenoiseOpts& o) {
  require_file(o.noisy, "noisy image");
  require_file(o.dict, "dictionary");
  if (!o.reference.empty()) require_file(o.reference, "reference image");
  DenoiseConfig cfg;
  cfg.patch_size = o.patch;
  cfg.stride = o.stride;
  cfg.sigma = o.sigma;
  cfg.eps_gain = o.gain;
  cfg.threads = resolve_threads(o.common.threads);
  cfg.validate();
  const fs::path dir = o.common.out;
  prepare_out_dir(dir);

  const auto D = load_dictionary(o.dict);
  if (D.rows() != o.patch * o.patch)
    throw CliError("dictionary " + o.dict + " has m = " + std::to_string(D.rows()) + ", patch size " +
                   std::to_string(o.patch) + " needs m = " + std::to_string(o.patch * o.patch));
  const auto noisy = load_pgm(o.noisy);
  std::optional<GrayImage> ref;
  if (!o.reference.empty()) {
    ref = load_pgm(o.reference);
    if (ref->width() != noisy.width() || ref->height() != noisy.height())
      throw CliError("reference " + o.reference + " and " + o.noisy + " differ in size");
  }
  DenoiseStats stats;
  const auto out = denoise_image(noisy, D, cfg, &stats);
  save_pgm(out, dir / "denoised.pgm");

  Manifest man{"denoise", "", o.common.seed, cfg.threads,
               {{"sigma", o.sigma}, {"eps_gain", o.gain}, {"patch", o.patch}, {"stride", o.stride}},
               {o.noisy, o.dict}, {(dir / "denoised.pgm").string()}};
  if (ref) man.inputs.push_back(o.reference);
  man.write(dir);

  std::cout << std::fixed << std::setprecision(2) << "patches " << stats.patches << "  mean atoms "
            << stats.mean_atoms() << "\n";
  if (ref) {
    std::cout << "PSNR input  " << psnr(*ref, noisy) << " dB\n";
    std::cout << "PSNR output " << psnr(*ref, load_pgm(dir / "denoised.pgm")) << " dB\n";
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string dict, truth, data;
  Index s = 0;
  double threshold = 0.98;
  unsigned threads = 0;
};

int run_eval(const EvalOpts& o) {
  require_file(o.dict, "dictionary");
  if (o.truth.empty() && o.data.empty()) throw CliError("eval needs --truth and/or --data");
  if (!o.truth.empty()) require_file(o.truth, "truth dictionary");
  if (!o.data.empty()) {
    require_file(o.data, "training data");
    if (o.s < 1) throw CliError("eval with --data needs --s >= 1");
  }
  const auto D = load_dictionary(o.dict);
  Json out{{"dictionary", o.dict}};
  if (!o.truth.empty()) {
    const auto T = load_dictionary(o.truth);
    if (T.rows() != D.rows())
      throw CliError("shape mismatch: " + o.dict + " has m = " + std::to_string(D.rows()) + ", " + o.truth +
                     " has m = " + std::to_string(T.rows()));
    out["atom_recovery_pct"] = atom_recovery(T, D, o.threshold);
  }
  if (!o.data.empty()) {
    const auto Y = load_training_set(o.data);
    if (Y.rows() != D.rows())
      throw CliError("shape mismatch: " + o.dict + " has m = " + std::to_string(D.rows()) + ", " + o.data +
                     " has m = " + std::to_string(Y.rows()));
    const auto X = omp_batch(Y, D, FixedSparsity{o.s}, resolve_threads(o.threads));
    out["mse_db"] = mse_db(Y, D, X);
    out["s"] = o.s;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- bench

int run_bench(const Common& c, bool seed_given) {
  if (c.config.empty()) throw CliError("bench needs --config");
  require_file(c.config, "config");
  const Json j = read_json_file(c.config);
  const std::string where = "bench config";
  config_detail::reject_unknown(j, {"data", "truth", "synthetic", "standard", "split_merge", "sweep_L"}, where);
  const fs::path base = fs::path(c.config).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_relative() ? base / p : fs::path(p); };

  TrainConfig std_cfg = train_config_from_json(j.at("standard"), base);
  TrainConfig sm_cfg = train_config_from_json(j.at("split_merge"), base);
  if (std_cfg.split_merge || !sm_cfg.split_merge)
    throw ConfigError(where + ": \"standard\" must be standard mode and \"split_merge\" split-merge mode");
  if (seed_given) std_cfg.seed = sm_cfg.seed = c.seed;
  std_cfg.threads = sm_cfg.threads = resolve_threads(c.threads);
  std::vector<Index> sweep;
  if (j.contains("sweep_L")) {
    sweep = j.at("sweep_L").get<std::vector<Index>>();
    if (sweep.empty()) throw ConfigError(where + ": sweep_L is empty");
  } else {
    sweep.push_back(sm_cfg.split_merge->L);
  }
  for (Index L : sweep) {
    auto probe = sm_cfg;
    probe.split_merge->L = L;
    probe.validate();
  }
  if (j.contains("data") == j.contains("synthetic"))
    throw ConfigError(where + ": give exactly one of \"data\" and \"synthetic\"");
  std::vector<std::string> inputs{c.config};
  std::optional<fs::path> data_path, truth_path;
  if (j.contains("data")) {
    data_path = resolve(j.at("data").get<std::string>());
    require_file(*data_path, "training data");
    inputs.push_back(data_path->string());
  }
  if (j.contains("truth")) {
    truth_path = resolve(j.at("truth").get<std::string>());
    require_file(*truth_path, "truth dictionary");
    inputs.push_back(truth_path->string());
  }
  const fs::path dir = c.out;
  prepare_out_dir(dir);

  TrainingSet Y;
  std::optional<Dictionary> truth;
  if (data_path) {
    Y = load_training_set(*data_path);
    if (truth_path) truth = load_dictionary(*truth_path);
  } else {
    const Json& sj = j.at("synthetic");
    config_detail::reject_unknown(sj, {"m", "K", "N", "s", "seed"}, where + ".synthetic");
    SyntheticSpec spec;
    spec.m = config_detail::get_or<Index>(sj, "m", spec.m, where);
    spec.K = config_detail::get_or<Index>(sj, "K", spec.K, where);
    spec.N = config_detail::get_or<Index>(sj, "N", spec.N, where);
    spec.s = config_detail::get_or<Index>(sj, "s", spec.s, where);
    spec.seed = config_detail::get_or<std::uint64_t>(sj, "seed", c.seed, where);
    spec.validate();
    const auto D = gen_dictionary(spec.m, spec.K, derive_seed(spec.seed, 1));
    Y = gen_signals(D, spec.N, spec.s, derive_seed(spec.seed, 2)).Y;
    truth = D;
  }

  const auto std_run = train_standard(Y, std_cfg);
  std::vector<std::pair<Index, BenchReport>> rows;
  Json reports = Json::array();
  for (Index L : sweep) {
    auto cfg = sm_cfg;
    cfg.split_merge->L = L;
    auto rep = bench_compare(Y, std_cfg, cfg, truth, std_run);
    reports.push_back(Json{{"L", L}, {"report", to_json(rep)}});
    std::cout << std::fixed << std::setprecision(3) << "L " << L << "  speedup " << rep.speedup
              << "  predicted " << 1.0 / rep.predicted.ratio() << "\n";
    rows.emplace_back(L, std::move(rep));
  }
  write_text(dir / "bench.json", reports.dump(2) + "\n");
  write_text(dir / "sweep.csv", sweep_csv(rows));

  Manifest man{"bench", c.config, std_cfg.seed, std_cfg.threads, j, inputs,
               {(dir / "bench.json").string(), (dir / "sweep.csv").string()}};
  man.write(dir);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dictionary learning with standard and split-and-merge training"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dictionary and sparse training set");
  add_common(gen_cmd, gen.common, true);
  gen_cmd->add_option("--m", gen.m, "Signal dimension");
  gen_cmd->add_option("--K", gen.K, "Atom count");
  gen_cmd->add_option("--N", gen.N, "Number of signals");
  gen_cmd->add_option("--s", gen.s, "Nonzeros per signal");

  PatchOpts patches;
  auto* patch_cmd = app.add_subcommand("patches", "Sample training patches from a directory of PGM images");
  add_common(patch_cmd, patches.common, false);
  patch_cmd->add_option("--corpus", patches.corpus, "Directory of .pgm images")->required();
  patch_cmd->add_option("--count", patches.count, "Number of patches");
  patch_cmd->add_option("--patch", patches.patch, "Patch side length");

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "Train a dictionary");
  add_common(train_cmd, tr.common, true);
  train_cmd->add_option("--data", tr.data, "SDATA training set")->required();

  NoiseOpts noise;
  auto* noise_cmd = app.add_subcommand("noise", "Add white Gaussian noise to a PGM image");
  add_common(noise_cmd, noise.common, false);
  noise_cmd->add_option("--input", noise.input, "Clean PGM image")->required();
  noise_cmd->add_option("--sigma", noise.sigma, "Noise standard deviation")->required();

  DenoiseOpts den;
  auto* den_cmd = app.add_subcommand("denoise", "Denoise a PGM image with a trained dictionary");
  add_common(den_cmd, den.common, false);
  den_cmd->add_option("--noisy", den.noisy, "Noisy PGM image")->required();
  den_cmd->add_option("--dict", den.dict, "SDICT dictionary")->required();
  den_cmd->add_option("--sigma", den.sigma, "Noise standard deviation")->required();
  den_cmd->add_option("--reference", den.reference, "Clean PGM for PSNR reporting");
  den_cmd->add_option("--gain", den.gain, "Error bound multiplier: eps = gain * sigma");
  den_cmd->add_option("--patch", den.patch, "Patch side length");
  den_cmd->add_option("--stride", den.stride, "Patch grid stride");

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "Atom recovery against a truth dictionary and/or MSE on data");
  eval_cmd->add_option("--dict", ev.dict, "SDICT dictionary to evaluate")->required();
  eval_cmd->add_option("--truth", ev.truth, "Ground-truth SDICT dictionary");
  eval_cmd->add_option("--data", ev.data, "SDATA training set");
  eval_cmd->add_option("--s", ev.s, "Sparsity for the MSE coding pass");
  eval_cmd->add_option("--threshold", ev.threshold, "Correlation threshold for a recovered atom");
  eval_cmd->add_option("--threads", ev.threads, "Worker threads");

  Common bench;
  auto* bench_cmd = app.add_subcommand("bench", "Compare standard and split-and-merge training over an L sweep");
  add_common(bench_cmd, bench, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*patch_cmd) return run_patches(patches);
    if (*train_cmd) {
      tr.seed_given = train_cmd->count("--seed") > 0;
      return run_train(tr);
    }
    if (*noise_cmd) return run_noise(noise);
    if (*den_cmd) return run_denoise(den);
    if (*eval_cmd) return run_eval(ev);
    if (*bench_cmd) return run_bench(bench, bench_cmd->count("--seed") > 0);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
