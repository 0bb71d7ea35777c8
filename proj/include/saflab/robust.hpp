#pragma once
// Modified Huber cost and the median-based error-scale tracker that sets the
// per-subband gating threshold.

#include <optional>
#include <vector>

namespace saflab {

// e^2 / 2 inside the threshold; xi^2 * |w_bar|^2 / 2 outside it. Divided by
// |w_bar|^2 in the cost, the clipped branch no longer depends on w, so the
// gradient there is zero.
double huber_rho(double error, double threshold, double wbar_norm_sq);

// k = 1.483 * (1 + 5 / (N_w - 1))
double scale_correction(int window_len);

struct RobustScaleConfig {
  int window_len = 7;
  double forgetting = 0.95;
};

// Tracks sigma_e^2(z) = lambda * sigma_e^2(z-1) + k * (1 - lambda) * med(A(z)),
// with A(z) the last N_w squared errors, and exposes xi = 2.576 * sigma_e.
class RobustScaleState {
 public:
  static constexpr double kConfidence = 2.576;
  static constexpr double kVarianceFloor = 1e-12;

  // Without an initial variance, the first observed e^2 seeds both the
  // variance and the window padding.
  explicit RobustScaleState(RobustScaleConfig cfg = {},
                            std::optional<double> initial_variance = std::nullopt);

  // Appends e^2, runs the recursion, returns the new threshold.
  double observe(double error);

  double variance_estimate() const { return variance_; }
  double threshold() const;
  double correction() const { return correction_; }
  int window_len() const { return cfg_.window_len; }
  double forgetting() const { return cfg_.forgetting; }

  // Squared errors currently held, oldest first; min(N_w, seen) entries.
  std::vector<double> window() const;

  // Resizes the window (keeping the newest entries) and recomputes k.
  void set_window_len(int window_len);

 private:
  double median() const;

  RobustScaleConfig cfg_;
  double correction_;
  double variance_ = 0.0;
  bool seeded_ = false;
  double pad_ = 0.0;            // first observed e^2
  std::vector<double> ring_;    // capacity N_w
  std::size_t head_ = 0;        // next write slot
  std::size_t count_ = 0;
  mutable std::vector<double> scratch_;
};

}  // namespace saflab
