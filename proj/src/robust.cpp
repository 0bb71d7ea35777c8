#include "saflab/robust.hpp"

#include <algorithm>
#include <cmath>

#include "saflab/errors.hpp"

namespace saflab {

double huber_rho(double error, double threshold, double wbar_norm_sq) {
  if (!(threshold > 0.0)) throw InvalidArgument("huber_rho: threshold must be > 0");
  if (!(wbar_norm_sq > 0.0)) throw InvalidArgument("huber_rho: |w_bar|^2 must be > 0");
  if (std::abs(error) < threshold) return 0.5 * error * error;
  return 0.5 * threshold * threshold * wbar_norm_sq;
}

double scale_correction(int window_len) {
  if (window_len < 2) throw InvalidArgument("scale_correction: window length must be >= 2");
  return 1.483 * (1.0 + 5.0 / (window_len - 1));
}

RobustScaleState::RobustScaleState(RobustScaleConfig cfg, std::optional<double> initial_variance)
    : cfg_(cfg), correction_(scale_correction(cfg.window_len)) {
  if (!(cfg.forgetting >= 0.0 && cfg.forgetting <= 1.0))
    throw InvalidArgument("RobustScaleState: forgetting factor must lie in [0, 1]");
  ring_.assign(static_cast<std::size_t>(cfg.window_len), 0.0);
  if (initial_variance) {
    if (!(*initial_variance >= 0.0))
      throw InvalidArgument("RobustScaleState: initial variance must be >= 0");
    variance_ = std::max(*initial_variance, kVarianceFloor);
    seeded_ = true;
  }
}

double RobustScaleState::observe(double error) {
  const double sq = error * error;
  if (count_ == 0) pad_ = sq;
  if (!seeded_) {
    variance_ = sq;
    seeded_ = true;
  }
  ring_[head_] = sq;
  head_ = (head_ + 1) % ring_.size();
  count_ = std::min(count_ + 1, ring_.size());

  const double lam = cfg_.forgetting;
  variance_ = lam * variance_ + correction_ * (1.0 - lam) * median();
  variance_ = std::max(variance_, kVarianceFloor);
  return threshold();
}

double RobustScaleState::threshold() const { return kConfidence * std::sqrt(variance_); }

std::vector<double> RobustScaleState::window() const {
  std::vector<double> out;
  out.reserve(count_);
  const std::size_t cap = ring_.size();
  const std::size_t start = (head_ + cap - count_) % cap;
  for (std::size_t k = 0; k < count_; ++k) out.push_back(ring_[(start + k) % cap]);
  return out;
}

void RobustScaleState::set_window_len(int window_len) {
  correction_ = scale_correction(window_len);
  auto held = window();
  const auto cap = static_cast<std::size_t>(window_len);
  if (held.size() > cap) held.erase(held.begin(), held.end() - static_cast<std::ptrdiff_t>(cap));
  ring_.assign(cap, 0.0);
  std::copy(held.begin(), held.end(), ring_.begin());
  count_ = held.size();
  head_ = count_ % cap;
  cfg_.window_len = window_len;
}

double RobustScaleState::median() const {
  // Slots not yet filled count as the first observation.
  // Filled slots are always ring_[0, count_) until the ring is full.
  scratch_.assign(ring_.begin(), ring_.end());
  std::fill(scratch_.begin() + static_cast<std::ptrdiff_t>(count_), scratch_.end(), pad_);
  const auto n = scratch_.size();
  const auto mid = scratch_.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(scratch_.begin(), mid, scratch_.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(scratch_.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace saflab
