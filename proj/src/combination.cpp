#include "saflab/combination.hpp"

#include <algorithm>
#include <cmath>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

void VariableStep::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("vss alpha must lie in (0, 1)");
  if (!(beta > 0.0)) throw InvalidArgument("vss beta must be > 0");
  if (!(mu_min > 0.0) || !(mu_max >= mu_min))
    throw InvalidArgument("vss bounds need 0 < mu_min <= mu_max");
}

void update_vss_step(VariableStep& vss, std::span<const double> errors,
                     std::span<const std::uint8_t> gated) {
  double sum = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i < gated.size() && gated[i]) continue;
    sum += errors[i] * errors[i];
    any = true;
  }
  if (any) vss.mu = vss.alpha * vss.mu + vss.beta * sum;
  vss.mu = std::clamp(vss.mu, vss.mu_min, vss.mu_max);
}

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

void update_mixing(MixingState& mix, std::span<const double> overall_errors,
                   std::span<const double> y1, std::span<const double> y2) {
  if (mix.pinned_lambda) {
    mix.lambda = *mix.pinned_lambda;
    return;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < overall_errors.size(); ++i)
    s += overall_errors[i] * (y1[i] - y2[i]);
  const double sgn = (s > 0.0) - (s < 0.0);
  mix.alpha_aux = std::clamp(mix.alpha_aux + mix.mu_alpha * sgn, -mix.a_plus, mix.a_plus);
  mix.lambda = sigmoid(mix.alpha_aux);
}

CombinationState::CombinationState(int filter_len, int num_subbands, double theta,
                                   const CombinationConfig& cfg, RobustScaleConfig robust)
    : w1_(filter_len, num_subbands, theta, robust),
      w2_(filter_len, num_subbands, theta, robust),
      vss_(cfg.vss),
      mix_(cfg.mixing),
      mu2_(cfg.mu2),
      mu1_(cfg.mu1),
      eps_(cfg.regularization),
      taps_(static_cast<std::size_t>(filter_len), 0.0),
      y1_(static_cast<std::size_t>(num_subbands)),
      y2_(y1_.size()),
      e_(y1_.size()) {
  if (!(mu2_ > 0.0)) throw InvalidArgument("combination: mu2 must be > 0");
  if (mu1_ && !(*mu1_ > 0.0)) throw InvalidArgument("combination: mu1 must be > 0");
  if (!mu1_) vss_.validate();
  if (!(mix_.a_plus > 0.0) || !(mix_.mu_alpha >= 0.0))
    throw InvalidArgument("combination: need a_plus > 0 and mu_alpha >= 0");
  if (mix_.pinned_lambda) {
    if (!(*mix_.pinned_lambda >= 0.0 && *mix_.pinned_lambda <= 1.0))
      throw InvalidArgument("combination: pinned lambda must lie in [0, 1]");
    mix_.lambda = *mix_.pinned_lambda;
  } else {
    mix_.alpha_aux = std::clamp(mix_.alpha_aux, -mix_.a_plus, mix_.a_plus);
    mix_.lambda = sigmoid(mix_.alpha_aux);
  }
}

void CombinationState::fix_subband_powers(const std::vector<double>& powers) {
  w1_.fix_subband_powers(powers);
  w2_.fix_subband_powers(powers);
}

StepReport step_combination(CombinationState& c, std::span<const SubbandFrame> frames) {
  const auto n = frames.size();
  if (static_cast<int>(n) != c.w1_.num_subbands())
    throw InvalidArgument("step_combination: expected one frame per subband");

  const double lam = c.mix_.lambda;
  for (std::size_t i = 0; i < n; ++i) {
    c.y1_[i] = kernels::dot(frames[i].regressor, c.w1_.taps());
    c.y2_[i] = kernels::dot(frames[i].regressor, c.w2_.taps());
    c.e_[i] = frames[i].desired - (lam * c.y1_[i] + (1.0 - lam) * c.y2_[i]);
  }

  const double mu1 = c.mu1_ ? *c.mu1_ : c.vss_.mu;
  StepReport r1 = step_tlmm(c.w1_, frames, mu1, Gate::robust, c.eps_);
  StepReport r2 = step_tlmm(c.w2_, frames, c.mu2_, Gate::robust, c.eps_);

  if (!c.mu1_ && !r1.nonfinite) update_vss_step(c.vss_, c.e_, c.w1_.last_gated());
  if (!r1.nonfinite && !r2.nonfinite) update_mixing(c.mix_, c.e_, c.y1_, c.y2_);

  kernels::blend(c.taps_, c.mix_.lambda, c.w1_.taps(), c.w2_.taps());
  r1.nonfinite = r1.nonfinite || r2.nonfinite;
  return r1;
}

VssTlmmState::VssTlmmState(int filter_len, int num_subbands, double theta, VariableStep vss,
                           RobustScaleConfig robust, double regularization)
    : w_(filter_len, num_subbands, theta, robust), vss_(vss), eps_(regularization) {
  vss_.validate();
}

StepReport VssTlmmState::step(std::span<const SubbandFrame> frames) {
  StepReport r = step_tlmm(w_, frames, vss_.mu, Gate::robust, eps_);
  if (!r.nonfinite) update_vss_step(vss_, w_.last_errors(), w_.last_gated());
  return r;
}

}  // namespace saflab
