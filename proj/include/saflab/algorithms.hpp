#pragma once
// Subband adaptive update rules: the TLS family (TLS-NSAF, TLMM-NSAF) and the
// classical baselines (NLMS, NSAF, M-NSAF).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "saflab/filterbank.hpp"
#include "saflab/robust.hpp"

namespace saflab {

enum class Algorithm { nlms, nsaf, m_nsaf, tls_nsaf, tlmm_nsaf, vss_tlmm, ctlmm, vss_ctlmm };

std::string_view to_string(Algorithm a);
// Accepts the names printed by to_string (also with '-' for '_').
Algorithm parse_algorithm(std::string_view name);
bool is_tls_family(Algorithm a);

struct AlgoParams {
  Algorithm kind = Algorithm::tlmm_nsaf;
  double step = 0.5;
  int num_subbands = 4;
  int filter_len = 128;
  double regularization = 1e-6;

  void validate() const;
};

// Full-band taps plus the per-subband bookkeeping the updates need.
class WeightState {
 public:
  // w(0) = 0. Subband powers follow an EMA of |x_i(z)|^2 / L (bias-corrected
  // for the zero start) unless fixed with fix_subband_powers().
  WeightState(int filter_len, int num_subbands, double theta, RobustScaleConfig robust = {},
              double power_forgetting = 0.99);

  int filter_len() const { return static_cast<int>(taps_.size()); }
  int num_subbands() const { return static_cast<int>(power_.size()); }
  double theta() const { return theta_; }

  std::span<const double> taps() const { return taps_; }
  std::span<double> taps() { return taps_; }

  // |w|^2 + theta, recomputed on every call.
  double wbar_norm_sq() const;

  double subband_power(int i) const { return power_[i]; }
  std::span<const double> subband_powers() const { return power_; }
  void fix_subband_powers(std::vector<double> powers);
  bool powers_fixed() const { return powers_fixed_; }
  void observe_power(int i, std::span<const double> regressor);

  RobustScaleState& scale_state(int i) { return scale_[i]; }
  const RobustScaleState& scale_state(int i) const { return scale_[i]; }

  // Written by the most recent step: a-priori errors and gate decisions.
  std::span<const double> last_errors() const { return errors_; }
  std::span<const std::uint8_t> last_gated() const { return gated_; }

 private:
  friend struct StepAccess;

  std::vector<double> taps_;
  double theta_;
  std::vector<double> power_;
  std::vector<double> power_acc_;
  std::vector<std::int64_t> power_seen_;
  double power_forgetting_;
  bool powers_fixed_ = false;
  std::vector<RobustScaleState> scale_;
  std::vector<double> errors_;
  std::vector<std::uint8_t> gated_;
};

// e_i = d_i - x_i^T w for each frame.
void subband_errors(const WeightState& state, std::span<const SubbandFrame> frames,
                    std::span<double> out);
std::vector<double> subband_errors(const WeightState& state, std::span<const SubbandFrame> frames);

enum class Gate {
  robust,  // per-subband |e_i| < xi_i test with the tracked scale
  off,     // xi = infinity
};

struct StepReport {
  int gated = 0;           // subbands whose contribution was dropped
  bool nonfinite = false;  // frame skipped, state untouched
};

// TLMM-NSAF: for every subband with |e_i| < xi_i,
//   w += mu * (|w_bar|^2 e_i x_i + e_i^2 w) / (|w_bar|^4 (L - 2) (sigma_i^2 + eps))
// all terms evaluated at w(z). Scale trackers see every e_i. With Gate::off
// this is TLS-NSAF.
StepReport step_tlmm(WeightState& state, std::span<const SubbandFrame> frames, double step,
                     Gate gate = Gate::robust, double regularization = 1e-6);

// nlms / nsaf / m_nsaf / tls_nsaf / tlmm_nsaf. nlms expects one full-band frame.
StepReport step_baseline(WeightState& state, std::span<const SubbandFrame> frames,
                         const AlgoParams& params);

}  // namespace saflab
