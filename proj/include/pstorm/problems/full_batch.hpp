#ifndef PSTORM_PROBLEMS_FULL_BATCH_HPP
#define PSTORM_PROBLEMS_FULL_BATCH_HPP

#include <memory>

#include "pstorm/core.hpp"

namespace pstorm {

// Noiseless view of another oracle: every draw returns the exact full
// gradient. The rng is left untouched and draws carry placeholder indices so
// batch sizes are still reported.
class FullBatchOracle final : public SmoothOracle {
 public:
  explicit FullBatchOracle(std::shared_ptr<const SmoothOracle> inner) : inner_(std::move(inner)) {
    if (!inner_) throw ParameterError("FullBatchOracle: null oracle");
  }

  std::size_t dim() const override { return inner_->dim(); }
  double smoothness() const override { return inner_->smoothness(); }

  MinibatchDraw draw(Rng&, std::size_t m) const override {
    MinibatchDraw b;
    b.indices.assign(m, 0);
    return b;
  }

  Vector batch_gradient(const Vector& x, const MinibatchDraw&) const override { return inner_->full_gradient(x); }
  Vector full_gradient(const Vector& x) const override { return inner_->full_gradient(x); }
  double objective(const Vector& x) const override { return inner_->objective(x); }
  std::optional<std::size_t> num_samples() const override { return inner_->num_samples(); }
  std::size_t evaluation_samples() const override { return inner_->evaluation_samples(); }
  std::string fingerprint() const override { return "full-batch:" + inner_->fingerprint(); }

 private:
  std::shared_ptr<const SmoothOracle> inner_;
};

}  // namespace pstorm

#endif  // PSTORM_PROBLEMS_FULL_BATCH_HPP
