#pragma once

// Binary containers. All integers are little-endian, all reals little-endian
// IEEE-754 binary64, matrices column-major.
//
//   SDICT v1   magic "SDICT\0v1", u32 m, u32 K, m*K reals      (dictionary)
//   SDATA v1   magic "SDATA\0v1", u32 m, u32 N, m*N reals      (training set)
//   SCODE v1   magic "SCODE\0v1", u32 K, u32 N, then per column
//              u32 nnz followed by nnz pairs (u32 index, real value)

#include "sparsedict/core.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>

namespace sparsedict {

namespace io_detail {

using Magic = std::array<char, 8>;
inline constexpr Magic kDictMagic = {'S', 'D', 'I', 'C', 'T', '\0', 'v', '1'};
inline constexpr Magic kDataMagic = {'S', 'D', 'A', 'T', 'A', '\0', 'v', '1'};
inline constexpr Magic kCodeMagic = {'S', 'C', 'O', 'D', 'E', '\0', 'v', '1'};

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::istream& in, const std::string& ctx) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(ctx + ": unexpected end of file");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

inline double get_f64(std::istream& in, const std::string& ctx) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(ctx + ": unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return std::bit_cast<double>(v);
}

inline std::uint32_t checked_u32(Index v, const std::string& what) {
  if (v < 0 || v > static_cast<Index>(std::numeric_limits<std::uint32_t>::max()))
    throw InvalidInput(what + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path, const Magic& magic, std::string_view kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  Magic got{};
  if (!in.read(got.data(), 8) || got != magic)
    throw FormatError(path.string() + ": not an " + std::string(kind) + " file");
  return in;
}

inline void write_matrix(const std::filesystem::path& path, const Magic& magic, const Matrix& M) {
  auto out = open_out(path);
  out.write(magic.data(), 8);
  put_u32(out, checked_u32(M.rows(), "row count"));
  put_u32(out, checked_u32(M.cols(), "column count"));
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i) put_f64(out, M(i, j));
  if (!out) throw FormatError(path.string() + ": write failed");
}

inline Matrix read_matrix(const std::filesystem::path& path, const Magic& magic, std::string_view kind) {
  auto in = open_in(path, magic, kind);
  const std::string ctx = path.string();
  const auto rows = get_u32(in, ctx);
  const auto cols = get_u32(in, ctx);
  Matrix M(rows, cols);
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i) M(i, j) = get_f64(in, ctx);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(ctx + ": trailing bytes after payload");
  return M;
}

} // namespace io_detail

inline void save_dictionary(const Dictionary& D, const std::filesystem::path& path) {
  io_detail::write_matrix(path, io_detail::kDictMagic, D.atoms());
}

/// Validates the unit-norm invariant on load.
inline Dictionary load_dictionary(const std::filesystem::path& path) {
  Matrix M = io_detail::read_matrix(path, io_detail::kDictMagic, "SDICT");
  try {
    return Dictionary(std::move(M));
  } catch (const InvalidInput& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void save_training_set(const TrainingSet& Y, const std::filesystem::path& path) {
  io_detail::write_matrix(path, io_detail::kDataMagic, Y);
}

inline TrainingSet load_training_set(const std::filesystem::path& path) {
  return io_detail::read_matrix(path, io_detail::kDataMagic, "SDATA");
}

inline void save_codes(const SparseCodeMatrix& X, const std::filesystem::path& path) {
  using namespace io_detail;
  auto out = open_out(path);
  out.write(kCodeMagic.data(), 8);
  put_u32(out, checked_u32(X.rows(), "row count"));
  put_u32(out, checked_u32(X.cols(), "column count"));
  for (Index i = 0; i < X.cols(); ++i) {
    const auto& e = X.col(i).entries();
    put_u32(out, static_cast<std::uint32_t>(e.size()));
    for (const auto& [j, v] : e) {
      put_u32(out, static_cast<std::uint32_t>(j));
      put_f64(out, v);
    }
  }
  if (!out) throw FormatError(path.string() + ": write failed");
}

inline SparseCodeMatrix load_codes(const std::filesystem::path& path) {
  using namespace io_detail;
  auto in = open_in(path, kCodeMagic, "SCODE");
  const std::string ctx = path.string();
  const auto K = get_u32(in, ctx);
  const auto N = get_u32(in, ctx);
  SparseCodeMatrix X(K, N);
  for (Index i = 0; i < X.cols(); ++i) {
    const auto nnz = get_u32(in, ctx);
    if (nnz > K) throw FormatError(ctx + ": column has more entries than rows");
    std::vector<SparseVector::Entry> e;
    e.reserve(nnz);
    for (std::uint32_t k = 0; k < nnz; ++k) {
      const auto j = get_u32(in, ctx);
      e.emplace_back(static_cast<Index>(j), get_f64(in, ctx));
    }
    try {
      X.set_col(i, SparseVector(K, std::move(e)));
    } catch (const InvalidInput& err) {
      throw FormatError(ctx + ": " + err.what());
    }
  }
  return X;
}

} // namespace sparsedict
