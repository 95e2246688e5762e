#ifndef PSTORM_PROBLEMS_MLP_HPP
#define PSTORM_PROBLEMS_MLP_HPP

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "pstorm/core.hpp"
#include "pstorm/dataio.hpp"

namespace pstorm {

// Three-layer tanh network without biases:
//   p = softmax(W3 tanh(W2 tanh(W1 x))),  loss = -log p_y.
// theta stacks W1 (d1 x d0), W2 (d2 x d1), W3 (c x d2), each column-major.
struct MlpShape {
  std::size_t d0 = 64;
  std::size_t d1 = 32;
  std::size_t d2 = 16;
  std::size_t c = 4;

  std::size_t num_params() const { return d0 * d1 + d1 * d2 + d2 * c; }
  std::size_t offset_w2() const { return d0 * d1; }
  std::size_t offset_w3() const { return d0 * d1 + d1 * d2; }
};

namespace detail {

template <class V>
struct MlpWeights {
  Eigen::Map<const Matrix> w1, w2, w3;

  MlpWeights(const V& theta, const MlpShape& s)
      : w1(theta.data(), static_cast<Eigen::Index>(s.d1), static_cast<Eigen::Index>(s.d0)),
        w2(theta.data() + s.offset_w2(), static_cast<Eigen::Index>(s.d2), static_cast<Eigen::Index>(s.d1)),
        w3(theta.data() + s.offset_w3(), static_cast<Eigen::Index>(s.c), static_cast<Eigen::Index>(s.d2)) {
    if (static_cast<std::size_t>(theta.size()) != s.num_params())
      throw InputError("mlp: parameter vector has wrong length");
  }
};

// Column-wise softmax with the max logit subtracted first.
inline Matrix softmax_columns(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    p.col(j) = (logits.col(j).array() - mx).exp().matrix();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

inline void check_label(int y, const MlpShape& s) {
  if (y < 1 || static_cast<std::size_t>(y) > s.c) throw InputError("mlp: label outside 1..c");
}

// Adds the sum (not mean) of per-sample gradients over the columns of x to
// *grad and the summed loss to *loss; either may be null.
inline void mlp_accumulate(const Vector& theta, const MlpShape& s, const Matrix& x, const std::vector<int>& y,
                           Vector* grad, double* loss) {
  const MlpWeights<Vector> w(theta, s);
  const Matrix h1 = (w.w1 * x).array().tanh().matrix();
  const Matrix h2 = (w.w2 * h1).array().tanh().matrix();
  const Matrix logits = w.w3 * h2;
  Matrix delta3 = softmax_columns(logits);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const int label = y[static_cast<std::size_t>(j)];
    check_label(label, s);
    if (loss) {
      const double mx = logits.col(j).maxCoeff();
      const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
      *loss += lse - logits(label - 1, j);
    }
    delta3(label - 1, j) -= 1.0;
  }
  if (!grad) return;
  const Matrix delta2 = ((w.w3.transpose() * delta3).array() * (1.0 - h2.array().square())).matrix();
  const Matrix delta1 = ((w.w2.transpose() * delta2).array() * (1.0 - h1.array().square())).matrix();

  Eigen::Map<Matrix> g1(grad->data(), static_cast<Eigen::Index>(s.d1), static_cast<Eigen::Index>(s.d0));
  Eigen::Map<Matrix> g2(grad->data() + s.offset_w2(), static_cast<Eigen::Index>(s.d2), static_cast<Eigen::Index>(s.d1));
  Eigen::Map<Matrix> g3(grad->data() + s.offset_w3(), static_cast<Eigen::Index>(s.c), static_cast<Eigen::Index>(s.d2));
  g1.noalias() += delta1 * x.transpose();
  g2.noalias() += delta2 * h1.transpose();
  g3.noalias() += delta3 * h2.transpose();
}

}  // namespace detail

/// Class probabilities for one input.
inline Vector mlp_forward(const Vector& theta, const MlpShape& s, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != s.d0) throw InputError("mlp_forward: input has wrong dimension");
  const detail::MlpWeights<Vector> w(theta, s);
  const Vector h1 = (w.w1 * x).array().tanh().matrix();
  const Vector h2 = (w.w2 * h1).array().tanh().matrix();
  return detail::softmax_columns(w.w3 * h2);
}

inline double mlp_sample_loss(const Vector& theta, const MlpShape& s, const Vector& x, int y) {
  detail::check_label(y, s);
  const detail::MlpWeights<Vector> w(theta, s);
  const Vector h1 = (w.w1 * x).array().tanh().matrix();
  const Vector h2 = (w.w2 * h1).array().tanh().matrix();
  const Vector z = w.w3 * h2;
  const double mx = z.maxCoeff();
  return mx + std::log((z.array() - mx).exp().sum()) - z[y - 1];
}

/// Backprop gradient of the per-sample cross entropy.
inline Vector mlp_sample_gradient(const Vector& theta, const MlpShape& s, const Vector& x, int y) {
  if (static_cast<std::size_t>(x.size()) != s.d0) throw InputError("mlp_sample_gradient: input has wrong dimension");
  Vector g = Vector::Zero(static_cast<Eigen::Index>(s.num_params()));
  detail::mlp_accumulate(theta, s, Matrix(x), std::vector<int>{y}, &g, nullptr);
  return g;
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
inline Vector mlp_init(Rng& rng, const MlpShape& s) {
  Vector theta(static_cast<Eigen::Index>(s.num_params()));
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double b = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-b, b);
    for (std::size_t i = 0; i < count; ++i) theta[static_cast<Eigen::Index>(offset + i)] = u(rng);
  };
  fill(0, s.d0 * s.d1, s.d0);
  fill(s.offset_w2(), s.d1 * s.d2, s.d1);
  fill(s.offset_w3(), s.d2 * s.c, s.d2);
  return theta;
}

/// Top-1 accuracy in percent; ties go to the lowest class index.
inline double mlp_accuracy(const Vector& theta, const MlpShape& s, const DenseDataset& test) {
  if (test.size() == 0) throw DataError("mlp_accuracy: empty test set");
  if (static_cast<std::size_t>(test.features.rows()) != s.d0) throw InputError("mlp_accuracy: wrong input dimension");
  const detail::MlpWeights<Vector> w(theta, s);
  const Matrix h1 = (w.w1 * test.features).array().tanh().matrix();
  const Matrix h2 = (w.w2 * h1).array().tanh().matrix();
  const Matrix logits = w.w3 * h2;
  std::size_t hits = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < logits.rows(); ++i)
      if (logits(i, j) > logits(best, j)) best = i;
    if (best + 1 == test.labels[static_cast<std::size_t>(j)]) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(test.size());
}

// Finite-sum training loss of the network over a labelled dataset.
class MlpOracle final : public SmoothOracle {
 public:
  MlpOracle(DenseDataset data, MlpShape shape, double L = 1.0) : data_(std::move(data)), shape_(shape), L_(L) {
    if (data_.size() == 0) throw DataError("MlpOracle: empty dataset");
    if (static_cast<std::size_t>(data_.features.rows()) != shape_.d0)
      throw DataError("MlpOracle: input dimension does not match the network");
    if (static_cast<std::size_t>(data_.features.cols()) != data_.size())
      throw DataError("MlpOracle: label count does not match sample count");
    for (const int y : data_.labels) detail::check_label(y, shape_);
    hash_ = dataset_hash(data_.features);
  }

  const MlpShape& shape() const { return shape_; }
  const DenseDataset& data() const { return data_; }

  std::size_t dim() const override { return shape_.num_params(); }
  double smoothness() const override { return L_; }

  MinibatchDraw draw(Rng& rng, std::size_t m) const override {
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    MinibatchDraw b;
    b.indices.resize(m);
    for (auto& i : b.indices) i = pick(rng);
    return b;
  }

  Vector batch_gradient(const Vector& theta, const MinibatchDraw& batch) const override {
    if (batch.indices.empty()) throw InputError("MlpOracle: empty batch");
    Matrix x(static_cast<Eigen::Index>(shape_.d0), static_cast<Eigen::Index>(batch.indices.size()));
    std::vector<int> y(batch.indices.size());
    for (std::size_t j = 0; j < batch.indices.size(); ++j) {
      x.col(static_cast<Eigen::Index>(j)) = data_.features.col(static_cast<Eigen::Index>(batch.indices[j]));
      y[j] = data_.labels[batch.indices[j]];
    }
    Vector g = Vector::Zero(static_cast<Eigen::Index>(dim()));
    detail::mlp_accumulate(theta, shape_, x, y, &g, nullptr);
    return g / static_cast<double>(batch.indices.size());
  }

  Vector full_gradient(const Vector& theta) const override {
    Vector g = Vector::Zero(static_cast<Eigen::Index>(dim()));
    sweep(theta, &g, nullptr);
    return g / static_cast<double>(data_.size());
  }

  double objective(const Vector& theta) const override {
    double loss = 0.0;
    sweep(theta, nullptr, &loss);
    return loss / static_cast<double>(data_.size());
  }

  std::optional<std::size_t> num_samples() const override { return data_.size(); }
  std::size_t evaluation_samples() const override { return data_.size(); }

  std::string fingerprint() const override {
    std::ostringstream os;
    os << "mlp:" << shape_.d0 << "-" << shape_.d1 << "-" << shape_.d2 << "-" << shape_.c << ":N=" << data_.size()
       << ":hash=" << std::hex << hash_;
    return os.str();
  }

 private:
  // Fixed-size chunks in index order so full-data sums are reproducible.
  void sweep(const Vector& theta, Vector* grad, double* loss) const {
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < data_.size(); start += kChunk) {
      const std::size_t b = std::min(kChunk, data_.size() - start);
      const Matrix x = data_.features.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(b));
      const std::vector<int> y(data_.labels.begin() + static_cast<std::ptrdiff_t>(start),
                               data_.labels.begin() + static_cast<std::ptrdiff_t>(start + b));
      detail::mlp_accumulate(theta, shape_, x, y, grad, loss);
    }
  }

  DenseDataset data_;
  MlpShape shape_;
  double L_;
  std::uint64_t hash_ = 0;
};

}  // namespace pstorm

#endif  // PSTORM_PROBLEMS_MLP_HPP
