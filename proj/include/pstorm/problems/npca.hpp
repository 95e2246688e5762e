#ifndef PSTORM_PROBLEMS_NPCA_HPP
#define PSTORM_PROBLEMS_NPCA_HPP

#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "pstorm/core.hpp"
#include "pstorm/dataio.hpp"

namespace pstorm {

// Nonnegative PCA written as a minimization: f(x; z) = -(z'x)^2 / 2 with unit
// samples z, constrained to the nonnegative unit ball. Every sample function is
// 1-smooth.

inline constexpr double kUnitTolerance = 1e-9;

/// Gradient of f(x; z) = -(z'x)^2 / 2, i.e. -(z'x) z.
inline Vector npca_sample_gradient(const Vector& x, const Vector& z) {
  if (x.size() != z.size()) throw InputError("npca_sample_gradient: dimension mismatch");
  if (std::abs(z.norm() - 1.0) > kUnitTolerance) throw InputError("npca_sample_gradient: sample is not unit norm");
  return -(z.dot(x)) * z;
}

/// z = w / |w| with w ~ N(1, I).
inline Vector npca_generate_sample(Rng& rng, std::size_t n) {
  if (n == 0) throw ParameterError("npca_generate_sample: n must be positive");
  std::normal_distribution<double> normal(1.0, 1.0);
  Vector w(static_cast<Eigen::Index>(n));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(rng);
    norm = w.norm();
  } while (!(norm > 0.0));
  return w / norm;
}

/// Feasible start with nonzero overlap with every nonnegative direction.
inline Vector npca_initial_point(std::size_t n) {
  return Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / std::sqrt(static_cast<double>(n)));
}

// Uniform entries in [0, 1), rescaled onto the unit sphere.
inline Vector npca_random_point(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(static_cast<Eigen::Index>(n));
  do {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
  } while (!(x.norm() > 0.0));
  return x / x.norm();
}

// Stochastic NPCA with z = w/|w|, w ~ N(1, I). Objective and full gradient
// refer to a fixed sample-approximation problem of eval_samples draws,
// generated from eval_seed and stored as its second-moment matrix.
class NpcaStochasticOracle final : public SmoothOracle {
 public:
  NpcaStochasticOracle(std::size_t n, std::size_t eval_samples, std::uint64_t eval_seed)
      : n_(n), eval_samples_(eval_samples), eval_seed_(eval_seed) {
    if (n == 0) throw ParameterError("NpcaStochasticOracle: n must be positive");
    if (eval_samples == 0) throw ParameterError("NpcaStochasticOracle: evaluation sample count must be positive");
    const auto nn = static_cast<Eigen::Index>(n);
    second_moment_ = Matrix::Zero(nn, nn);
    Rng rng(eval_seed);
    constexpr std::size_t kChunk = 1024;
    Matrix z(nn, static_cast<Eigen::Index>(kChunk));
    for (std::size_t done = 0; done < eval_samples; done += kChunk) {
      const std::size_t b = std::min(kChunk, eval_samples - done);
      for (std::size_t j = 0; j < b; ++j) z.col(static_cast<Eigen::Index>(j)) = npca_generate_sample(rng, n);
      const auto zb = z.leftCols(static_cast<Eigen::Index>(b));
      second_moment_.noalias() += zb * zb.transpose();
    }
    second_moment_ /= static_cast<double>(eval_samples);
  }

  std::size_t dim() const override { return n_; }
  double smoothness() const override { return 1.0; }

  MinibatchDraw draw(Rng& rng, std::size_t m) const override {
    MinibatchDraw b;
    b.samples.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) b.samples.col(static_cast<Eigen::Index>(j)) = npca_generate_sample(rng, n_);
    return b;
  }

  Vector batch_gradient(const Vector& x, const MinibatchDraw& batch) const override {
    const Matrix& z = batch.samples;
    if (z.cols() == 0) throw InputError("NpcaStochasticOracle: empty batch");
    const Vector proj = z.transpose() * x;
    return -(z * proj) / static_cast<double>(z.cols());
  }

  Vector full_gradient(const Vector& x) const override { return -(second_moment_ * x); }

  double objective(const Vector& x) const override { return -0.5 * x.dot(second_moment_ * x); }

  std::optional<std::size_t> num_samples() const override { return std::nullopt; }
  std::size_t evaluation_samples() const override { return eval_samples_; }

  std::string fingerprint() const override {
    std::ostringstream os;
    os << "npca-random:n=" << n_ << ":eval=" << eval_samples_ << ":seed=" << eval_seed_;
    return os.str();
  }

  const Matrix& second_moment() const { return second_moment_; }

 private:
  std::size_t n_;
  std::size_t eval_samples_;
  std::uint64_t eval_seed_;
  Matrix second_moment_;
};

// Finite-sum NPCA over the rows of a sparse matrix (each row a unit sample).
class NpcaFiniteSumOracle final : public SmoothOracle {
 public:
  // Dense second-moment caching is used up to this dimension.
  static constexpr std::size_t kDenseMomentLimit = 1024;

  explicit NpcaFiniteSumOracle(SparseMatrix rows, std::optional<std::size_t> n_cols = std::nullopt)
      : rows_(std::move(rows)) {
    if (rows_.n_rows == 0) throw DataError("NpcaFiniteSumOracle: no samples");
    if (n_cols) {
      if (*n_cols < rows_.n_cols) throw DataError("NpcaFiniteSumOracle: n_cols smaller than the data");
      rows_.n_cols = *n_cols;
    }
    for (std::size_t r = 0; r < rows_.n_rows; ++r)
      if (std::abs(rows_.row_norm(r) - 1.0) > kUnitTolerance)
        throw DataError("NpcaFiniteSumOracle: row " + std::to_string(r) + " is not unit norm");
    hash_ = dataset_hash(rows_);
    if (rows_.n_cols <= kDenseMomentLimit) {
      const auto n = static_cast<Eigen::Index>(rows_.n_cols);
      Matrix m = Matrix::Zero(n, n);
      for (std::size_t r = 0; r < rows_.n_rows; ++r) {
        const auto cols = rows_.row_cols(r);
        const auto vals = rows_.row_vals(r);
        for (std::size_t a = 0; a < cols.size(); ++a)
          for (std::size_t b = 0; b < cols.size(); ++b)
            m(static_cast<Eigen::Index>(cols[a]), static_cast<Eigen::Index>(cols[b])) += vals[a] * vals[b];
      }
      second_moment_ = m / static_cast<double>(rows_.n_rows);
    }
  }

  // Dense samples, one per column.
  static NpcaFiniteSumOracle from_dense(const Matrix& samples) {
    SparseMatrix a;
    std::vector<std::pair<std::size_t, double>> row;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      row.clear();
      for (Eigen::Index i = 0; i < samples.rows(); ++i)
        if (samples(i, j) != 0.0) row.emplace_back(static_cast<std::size_t>(i), samples(i, j));
      a.push_row(row);
    }
    return NpcaFiniteSumOracle(std::move(a), static_cast<std::size_t>(samples.rows()));
  }

  std::size_t dim() const override { return rows_.n_cols; }
  double smoothness() const override { return 1.0; }

  MinibatchDraw draw(Rng& rng, std::size_t m) const override {
    std::uniform_int_distribution<std::size_t> pick(0, rows_.n_rows - 1);
    MinibatchDraw b;
    b.indices.resize(m);
    for (auto& i : b.indices) i = pick(rng);
    return b;
  }

  Vector batch_gradient(const Vector& x, const MinibatchDraw& batch) const override {
    if (batch.indices.empty()) throw InputError("NpcaFiniteSumOracle: empty batch");
    Vector g = Vector::Zero(x.size());
    for (const std::size_t r : batch.indices) accumulate_row(r, x, g);
    g /= static_cast<double>(batch.indices.size());
    return g;
  }

  Vector full_gradient(const Vector& x) const override {
    if (second_moment_.size() > 0) return -(second_moment_ * x);
    Vector g = Vector::Zero(x.size());
    for (std::size_t r = 0; r < rows_.n_rows; ++r) accumulate_row(r, x, g);
    return g / static_cast<double>(rows_.n_rows);
  }

  double objective(const Vector& x) const override {
    if (second_moment_.size() > 0) return -0.5 * x.dot(second_moment_ * x);
    double s = 0.0;
    for (std::size_t r = 0; r < rows_.n_rows; ++r) {
      const double t = rows_.row_dot(r, x);
      s += t * t;
    }
    return -0.5 * s / static_cast<double>(rows_.n_rows);
  }

  std::optional<std::size_t> num_samples() const override { return rows_.n_rows; }
  std::size_t evaluation_samples() const override { return rows_.n_rows; }

  std::string fingerprint() const override {
    std::ostringstream os;
    os << "npca-finite:n=" << rows_.n_cols << ":N=" << rows_.n_rows << ":hash=" << std::hex << hash_;
    return os.str();
  }

  const SparseMatrix& rows() const { return rows_; }

 private:
  void accumulate_row(std::size_t r, const Vector& x, Vector& g) const {
    const double s = rows_.row_dot(r, x);
    for (std::size_t p = rows_.row_ptr[r]; p < rows_.row_ptr[r + 1]; ++p)
      g[static_cast<Eigen::Index>(rows_.col[p])] -= s * rows_.val[p];
  }

  SparseMatrix rows_;
  Matrix second_moment_;
  std::uint64_t hash_ = 0;
};

}  // namespace pstorm

#endif  // PSTORM_PROBLEMS_NPCA_HPP
