#include "oracles.hpp"

#include "sparsedict/config.hpp"
#include "sparsedict/io.hpp"
#include "sparsedict/synthesis.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace sparsedict;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "sparsedict_test_io";
  fs::create_directories(dir);
  return dir;
}

void append_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  out << bytes;
}

} // namespace

TEST(DictionaryFile, RoundTripIsBitExact) {
  const auto D = gen_dictionary(30, 60, 1);
  const auto path = temp_dir() / "d.sdict";
  save_dictionary(D, path);
  EXPECT_EQ(load_dictionary(path), D);
  EXPECT_EQ(fs::file_size(path), 8u + 4u + 4u + 30u * 60u * 8u);
}

TEST(DictionaryFile, LayoutIsLittleEndianColumnMajor) {
  Matrix M(2, 2);
  M << 1, 0,
       0, 1;
  const auto path = temp_dir() / "eye.sdict";
  save_dictionary(Dictionary(M), path);
  std::ifstream in(path, std::ios::binary);
  char buf[48];
  in.read(buf, 48);
  ASSERT_EQ(in.gcount(), 48);
  EXPECT_EQ(std::memcmp(buf, "SDICT\0v1", 8), 0);
  EXPECT_EQ(static_cast<unsigned char>(buf[8]), 2u);
  EXPECT_EQ(static_cast<unsigned char>(buf[12]), 2u);
  double first, second;
  std::memcpy(&first, buf + 16, 8);
  std::memcpy(&second, buf + 24, 8);
  EXPECT_EQ(first, 1.0);
  EXPECT_EQ(second, 0.0);
}

TEST(DictionaryFile, RejectsWrongMagicTruncationAndTrailingBytes) {
  const auto dir = temp_dir();
  save_training_set(Matrix::Identity(3, 3), dir / "data.sdata");
  EXPECT_THROW(load_dictionary(dir / "data.sdata"), FormatError);

  const auto good = dir / "good.sdict";
  save_dictionary(Dictionary(Matrix::Identity(3, 3)), good);
  const auto trunc = dir / "trunc.sdict";
  fs::copy_file(good, trunc, fs::copy_options::overwrite_existing);
  fs::resize_file(trunc, fs::file_size(good) - 3);
  EXPECT_THROW(load_dictionary(trunc), FormatError);

  const auto extra = dir / "extra.sdict";
  fs::copy_file(good, extra, fs::copy_options::overwrite_existing);
  append_bytes(extra, "x");
  EXPECT_THROW(load_dictionary(extra), FormatError);
}

TEST(DictionaryFile, RejectsNonUnitColumns) {
  const auto path = temp_dir() / "nonunit.sdict";
  save_training_set(2.0 * Matrix::Identity(2, 2), path);
  // Rewrite the magic so only the norm check can fail.
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.write("SDICT\0v1", 8);
  }
  try {
    load_dictionary(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
}

TEST(TrainingSetFile, RoundTripIsBitExact) {
  Rng rng(3);
  const TrainingSet Y = oracle::random_gaussian(7, 33, rng);
  const auto path = temp_dir() / "y.sdata";
  save_training_set(Y, path);
  EXPECT_EQ(load_training_set(path), Y);
}

TEST(CodeFile, RoundTripIsBitExact) {
  const auto D = gen_dictionary(10, 20, 4);
  const auto data = gen_signals(D, 50, 3, 5);
  SparseCodeMatrix X = data.X;
  X.set_col(7, SparseVector(20, {}));
  const auto path = temp_dir() / "x.scode";
  save_codes(X, path);
  EXPECT_EQ(load_codes(path), X);
}

TEST(CodeFile, RejectsOutOfRangeIndex) {
  const auto path = temp_dir() / "bad.scode";
  save_codes(SparseCodeMatrix::from_dense(Matrix::Identity(2, 1)), path);
  // Column 0 entry index lives after magic (8) + K (4) + N (4) + nnz (4).
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(20);
    const char idx[4] = {5, 0, 0, 0};
    f.write(idx, 4);
  }
  EXPECT_THROW(load_codes(path), FormatError);
}

TEST(CodeFile, MissingFileNamesPath) {
  const auto path = temp_dir() / "nope.scode";
  try {
    load_codes(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
}

TEST(TrainConfigJson, StandardDefaults) {
  const auto cfg = train_config_from_json(Json::parse(R"({"K": 60, "s": 6})"));
  EXPECT_EQ(cfg.K, 60);
  EXPECT_EQ(cfg.iterations, 100);
  EXPECT_EQ(cfg.init, InitKind::FirstColumns);
  EXPECT_FALSE(cfg.split_merge.has_value());
}

TEST(TrainConfigJson, SplitMergeRoundTrip) {
  const Json j = Json::parse(R"({"K": 60, "s": 6, "iterations": 50, "seed": 9, "mode": "split-merge",
    "split_merge": {"L": 40, "K1": 50, "s1": 3, "s2": 2}})");
  const auto cfg = train_config_from_json(j);
  ASSERT_TRUE(cfg.split_merge.has_value());
  EXPECT_EQ(cfg.split_merge->L, 40);
  EXPECT_EQ(cfg.local_iterations(), 50);
  const auto again = train_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(again), to_json(cfg));
}

TEST(TrainConfigJson, RejectsBrokenSparsityProductBeforeCompute) {
  const Json j = Json::parse(R"({"K": 60, "s": 6, "mode": "split-merge",
    "split_merge": {"L": 40, "K1": 50, "s1": 4, "s2": 2}})");
  try {
    train_config_from_json(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("s1 * s2 must equal s"), std::string::npos);
  }
}

TEST(TrainConfigJson, RejectsUnknownKeysAndModes) {
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"K": 6, "s": 2, "iters": 3})")), ConfigError);
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"K": 6, "s": 2, "mode": "fast"})")), ConfigError);
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"K": 6, "s": 2, "mode": "split-merge"})")), ConfigError);
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"K": 6})")), ConfigError);
  EXPECT_THROW(train_config_from_json(Json::parse(R"({"K": "six", "s": 2})")), ConfigError);
}

TEST(TrainConfigJson, ExplicitInitLoadsRelativeDictionary) {
  const auto dir = temp_dir();
  save_dictionary(Dictionary(Matrix::Identity(4, 4)), dir / "init.sdict");
  {
    std::ofstream out(dir / "cfg.json");
    out << R"({"K": 4, "s": 1, "init": "explicit-matrix", "init_dictionary": "init.sdict"})";
  }
  const auto cfg = load_train_config(dir / "cfg.json");
  ASSERT_TRUE(cfg.init_dictionary.has_value());
  EXPECT_EQ(*cfg.init_dictionary, Dictionary(Matrix::Identity(4, 4)));
}

TEST(TrainReportJson, RoundTrip) {
  TrainReport r;
  r.final_mse_db = -21.5;
  r.residuals = {3.0, 2.0, 1.5};
  r.wall_time_s = 1.25;
  r.local_wall_times_s = {0.5, 0.25};
  r.replaced_atoms = 4;
  r.dropped_locals = {1};
  const Json j = to_json(r);
  EXPECT_EQ(to_json(train_report_from_json(j)), j);
}
