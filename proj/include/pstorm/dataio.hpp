#ifndef PSTORM_DATAIO_HPP
#define PSTORM_DATAIO_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pstorm/core.hpp"

namespace pstorm {

// Compressed sparse rows. Column indices are 0-based and strictly increasing
// within each row.
struct SparseMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }

  std::span<const std::size_t> row_cols(std::size_t r) const {
    return {col.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }
  std::span<const double> row_vals(std::size_t r) const {
    return {val.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }

  void push_row(const std::vector<std::pair<std::size_t, double>>& entries) {
    for (const auto& [c, v] : entries) {
      if (col.size() > row_ptr.back() && col.back() >= c)
        throw DataError("SparseMatrix: column indices must increase within a row");
      col.push_back(c);
      val.push_back(v);
      if (c + 1 > n_cols) n_cols = c + 1;
    }
    row_ptr.push_back(col.size());
    ++n_rows;
  }

  double row_dot(std::size_t r, const Vector& x) const {
    double s = 0.0;
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) s += val[p] * x[static_cast<Eigen::Index>(col[p])];
    return s;
  }

  double row_norm(std::size_t r) const {
    double s = 0.0;
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) s += val[p] * val[p];
    return std::sqrt(s);
  }

  bool operator==(const SparseMatrix&) const = default;
};

// Features plus integer labels. Dense features store one sample per column.
template <class Features>
struct LabeledData {
  Features features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

using SparseDataset = LabeledData<SparseMatrix>;
using DenseDataset = LabeledData<Matrix>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace detail

/// Reads "label idx:val idx:val ..." lines. Indices are 1-based on disk and
/// 0-based in memory. '#' starts a comment; blank lines are skipped.
/// Malformed input is rejected with the offending line number.
inline SparseDataset parse_libsvm(std::istream& in) {
  SparseDataset ds;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::size_t, double>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = detail::trim(sv);
    if (sv.empty()) continue;

    entries.clear();
    bool first = true;
    std::size_t pos = 0;
    while (pos < sv.size()) {
      const auto end = std::min(sv.find_first_of(" \t", pos), sv.size());
      const std::string_view tok = sv.substr(pos, end - pos);
      pos = sv.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = sv.size();

      if (first) {
        first = false;
        long long label = 0;
        if (!detail::parse_number(tok, label)) {
          double real = 0.0;
          if (detail::parse_number(tok, real) && std::isfinite(real) && real == std::floor(real) &&
              std::abs(real) < 2e9) {
            label = static_cast<long long>(real);
          } else {
            throw ParseError("invalid label '" + std::string(tok) + "'", lineno);
          }
        }
        ds.labels.push_back(static_cast<int>(label));
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError("expected idx:val, got '" + std::string(tok) + "'", lineno);
      unsigned long long idx = 0;
      double v = 0.0;
      if (!detail::parse_number(tok.substr(0, colon), idx))
        throw ParseError("nonnumeric index in '" + std::string(tok) + "'", lineno);
      if (idx < 1) throw ParseError("index must be >= 1", lineno);
      if (!detail::parse_number(tok.substr(colon + 1), v) || !std::isfinite(v))
        throw ParseError("nonnumeric value in '" + std::string(tok) + "'", lineno);
      if (!entries.empty() && idx - 1 <= entries.back().first)
        throw ParseError("indices must be strictly ascending", lineno);
      entries.emplace_back(static_cast<std::size_t>(idx - 1), v);
    }
    ds.features.push_row(entries);
  }
  return ds;
}

inline SparseDataset parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_libsvm(in);
}

/// Writes the dataset back in LIBSVM format with round-trip exact values.
inline void write_libsvm(std::ostream& out, const SparseDataset& ds) {
  char buf[64];
  for (std::size_t r = 0; r < ds.features.n_rows; ++r) {
    out << ds.labels[r];
    const auto cols = ds.features.row_cols(r);
    const auto vals = ds.features.row_vals(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), vals[i]);
      out << ' ' << (cols[i] + 1) << ':' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

/// Scales every row to unit Euclidean norm.
inline SparseDataset normalize_rows(SparseDataset ds) {
  SparseMatrix& a = ds.features;
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    const double norm = a.row_norm(r);
    if (!(norm > 0.0)) throw DataError("normalize_rows: row " + std::to_string(r) + " is all zero");
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) a.val[p] /= norm;
  }
  return ds;
}

// ---------------------------------------------------------------------------
// IDX (MNIST) files: big-endian header, unsigned byte payload.

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError(std::string("IDX: truncated ") + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

inline std::vector<unsigned char> read_payload(std::istream& in, std::size_t n) {
  std::vector<unsigned char> buf(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n)))
    throw DataError("IDX: truncated payload");
  return buf;
}

}  // namespace detail

/// Images as one column per image, pixels scaled to [0, 1].
inline Matrix read_idx_images(std::istream& in) {
  const std::uint32_t magic = detail::read_be32(in, "magic");
  if (magic != kIdxImageMagic) throw DataError("IDX: bad image magic");
  const std::uint32_t n = detail::read_be32(in, "header");
  const std::uint32_t rows = detail::read_be32(in, "header");
  const std::uint32_t cols = detail::read_be32(in, "header");
  const std::size_t pixels = std::size_t{rows} * cols;
  if (pixels == 0) throw DataError("IDX: empty image shape");
  const auto payload = detail::read_payload(in, pixels * n);
  Matrix images(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < pixels; ++p)
      images(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = payload[i * pixels + p] / 255.0;
  return images;
}

/// Digit labels 0..9 mapped to classes 1..10.
inline std::vector<int> read_idx_labels(std::istream& in) {
  const std::uint32_t magic = detail::read_be32(in, "magic");
  if (magic != kIdxLabelMagic) throw DataError("IDX: bad label magic");
  const std::uint32_t n = detail::read_be32(in, "header");
  const auto payload = detail::read_payload(in, n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(payload[i]) + 1;
  return labels;
}

inline DenseDataset read_idx(std::istream& images, std::istream& labels) {
  DenseDataset ds{read_idx_images(images), read_idx_labels(labels)};
  if (static_cast<std::size_t>(ds.features.cols()) != ds.labels.size())
    throw DataError("IDX: image and label counts differ");
  return ds;
}

inline DenseDataset read_idx_files(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw DataError("cannot open " + images_path);
  std::ifstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw DataError("cannot open " + labels_path);
  return read_idx(img, lbl);
}

/// c Gaussian blobs with unit-variance noise. Class j (1-based) is centred at
/// (separation / sqrt 2) e_j, so every pair of class means is `separation`
/// apart. Labels cycle 1..c, which keeps classes balanced within one sample.
inline DenseDataset gen_synthetic_classes(Rng& rng, std::size_t N, std::size_t dim, std::size_t c, double separation) {
  if (c < 2) throw ParameterError("gen_synthetic_classes: need at least two classes");
  if (dim < c) throw ParameterError("gen_synthetic_classes: dim must be >= number of classes");
  if (!(separation >= 0.0)) throw ParameterError("gen_synthetic_classes: separation must be >= 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double offset = separation / std::sqrt(2.0);
  DenseDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(N));
  ds.labels.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t cls = i % c;
    for (std::size_t j = 0; j < dim; ++j)
      ds.features(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = normal(rng);
    ds.features(static_cast<Eigen::Index>(cls), static_cast<Eigen::Index>(i)) += offset;
    ds.labels[i] = static_cast<int>(cls) + 1;
  }
  return ds;
}

// FNV-1a over the raw dataset bytes; used to key cached reference values.
inline std::uint64_t dataset_hash(const SparseMatrix& a) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  mix(a.row_ptr.data(), a.row_ptr.size() * sizeof(std::size_t));
  mix(a.col.data(), a.col.size() * sizeof(std::size_t));
  mix(a.val.data(), a.val.size() * sizeof(double));
  return h;
}

inline std::uint64_t dataset_hash(const Matrix& a) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* b = reinterpret_cast<const unsigned char*>(a.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(a.size()) * sizeof(double); ++i) {
    h ^= b[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace pstorm

#endif  // PSTORM_DATAIO_HPP
