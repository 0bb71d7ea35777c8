#pragma once
// Variable step size and the convex combination of two TLMM-NSAF filters:
// a fast branch driven by mu_vss and a slow branch with a fixed small step.

#include <optional>
#include <span>
#include <vector>

#include "saflab/algorithms.hpp"

namespace saflab {

struct VariableStep {
  double mu = 0.0;
  double alpha = 0.99;
  double beta = 0.0058;
  double mu_min = 0.0;
  double mu_max = 0.0;

  void validate() const;
};

// Subbands flagged in `gated` are left out of the error sum; if every subband
// is gated, mu is unchanged. The result is clamped to [mu_min, mu_max].
void update_vss_step(VariableStep& vss, std::span<const double> errors,
                     std::span<const std::uint8_t> gated);

struct MixingState {
  static constexpr double kDefaultLimit = 4.0;

  double alpha_aux = 0.0;
  double lambda = 0.5;
  double mu_alpha = 0.02;
  double a_plus = kDefaultLimit;
  // Holds lambda at a constant (0 and 1 included) and skips adaptation.
  // The sigmoid alone never reaches the endpoints.
  std::optional<double> pinned_lambda;
};

double sigmoid(double a);

// alpha += mu_alpha * sgn(sum_i e_i (y1_i - y2_i)), clamped to +-a_plus, then
// lambda = sigmoid(alpha).
void update_mixing(MixingState& mix, std::span<const double> overall_errors,
                   std::span<const double> y1, std::span<const double> y2);

struct CombinationConfig {
  double mu2 = 0.05;
  // Fixed step for branch 1 (plain CTLMM); empty means mu_vss drives it.
  std::optional<double> mu1;
  VariableStep vss;
  MixingState mixing;
  double regularization = 1e-6;
};

class CombinationState {
 public:
  CombinationState(int filter_len, int num_subbands, double theta, const CombinationConfig& cfg,
                   RobustScaleConfig robust = {});

  WeightState& branch1() { return w1_; }
  WeightState& branch2() { return w2_; }
  const WeightState& branch1() const { return w1_; }
  const WeightState& branch2() const { return w2_; }

  const VariableStep& vss() const { return vss_; }
  const MixingState& mixing() const { return mix_; }
  double mu2() const { return mu2_; }
  const std::optional<double>& mu1() const { return mu1_; }

  // w = lambda w1 + (1 - lambda) w2 for the current lambda.
  std::span<const double> taps() const { return taps_; }

  // Injects the same known subband powers into both branches.
  void fix_subband_powers(const std::vector<double>& powers);

 private:
  friend StepReport step_combination(CombinationState&, std::span<const SubbandFrame>);

  WeightState w1_, w2_;
  VariableStep vss_;
  MixingState mix_;
  double mu2_;
  std::optional<double> mu1_;
  double eps_;
  std::vector<double> taps_;
  std::vector<double> y1_, y2_, e_;
};

// One decimated iteration: branch outputs and overall errors at w(z), branch
// updates, mu_vss update, mixing update, then w(z+1) from the new lambda.
// The report carries branch 1's gate count.
StepReport step_combination(CombinationState& combo, std::span<const SubbandFrame> frames);

// Single TLMM-NSAF filter whose step follows the VSS recursion on its own errors.
class VssTlmmState {
 public:
  VssTlmmState(int filter_len, int num_subbands, double theta, VariableStep vss,
               RobustScaleConfig robust = {}, double regularization = 1e-6);

  WeightState& weights() { return w_; }
  const WeightState& weights() const { return w_; }
  std::span<const double> taps() const { return w_.taps(); }
  const VariableStep& vss() const { return vss_; }

  StepReport step(std::span<const SubbandFrame> frames);

 private:
  WeightState w_;
  VariableStep vss_;
  double eps_;
};

}  // namespace saflab
