#include "saflab/algorithms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::nlms: return "nlms";
    case Algorithm::nsaf: return "nsaf";
    case Algorithm::m_nsaf: return "m_nsaf";
    case Algorithm::tls_nsaf: return "tls_nsaf";
    case Algorithm::tlmm_nsaf: return "tlmm_nsaf";
    case Algorithm::vss_tlmm: return "vss_tlmm";
    case Algorithm::ctlmm: return "ctlmm";
    case Algorithm::vss_ctlmm: return "vss_ctlmm";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string n(name);
  for (auto& c : n) {
    if (c == '-') c = '_';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (auto a : {Algorithm::nlms, Algorithm::nsaf, Algorithm::m_nsaf, Algorithm::tls_nsaf,
                 Algorithm::tlmm_nsaf, Algorithm::vss_tlmm, Algorithm::ctlmm,
                 Algorithm::vss_ctlmm})
    if (to_string(a) == n) return a;
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "'");
}

bool is_tls_family(Algorithm a) {
  return a != Algorithm::nlms && a != Algorithm::nsaf && a != Algorithm::m_nsaf;
}

void AlgoParams::validate() const {
  if (!(step > 0.0)) throw InvalidArgument("step size must be > 0");
  if (num_subbands < 1) throw InvalidArgument("num_subbands must be >= 1");
  if (filter_len < 5) throw InvalidArgument("filter_len must be >= 5");
  if (!(regularization > 0.0)) throw InvalidArgument("regularization must be > 0");
}

WeightState::WeightState(int filter_len, int num_subbands, double theta, RobustScaleConfig robust,
                         double power_forgetting)
    : taps_(static_cast<std::size_t>(std::max(filter_len, 0)), 0.0),
      theta_(theta),
      power_(static_cast<std::size_t>(std::max(num_subbands, 0)), 0.0),
      power_acc_(power_.size(), 0.0),
      power_seen_(power_.size(), 0),
      power_forgetting_(power_forgetting),
      scale_(power_.size(), RobustScaleState(robust)),
      errors_(power_.size(), 0.0),
      gated_(power_.size(), 0) {
  if (filter_len < 1) throw InvalidArgument("WeightState: filter_len must be >= 1");
  if (num_subbands < 1) throw InvalidArgument("WeightState: num_subbands must be >= 1");
  if (!(theta >= 0.0)) throw InvalidArgument("WeightState: theta must be >= 0");
  if (!(power_forgetting >= 0.0 && power_forgetting < 1.0))
    throw InvalidArgument("WeightState: power forgetting must lie in [0, 1)");
}

double WeightState::wbar_norm_sq() const { return kernels::sum_squares(taps_) + theta_; }

void WeightState::fix_subband_powers(std::vector<double> powers) {
  if (powers.size() != power_.size())
    throw InvalidArgument("fix_subband_powers: one power per subband required");
  for (double p : powers)
    if (!(p > 0.0)) throw InvalidArgument("fix_subband_powers: powers must be > 0");
  power_ = std::move(powers);
  powers_fixed_ = true;
}

void WeightState::observe_power(int i, std::span<const double> regressor) {
  if (powers_fixed_) return;
  const double obs = kernels::sum_squares(regressor) / static_cast<double>(regressor.size());
  const double f = power_forgetting_;
  power_acc_[i] = f * power_acc_[i] + (1.0 - f) * obs;
  ++power_seen_[i];
  power_[i] = power_acc_[i] / (1.0 - std::pow(f, static_cast<double>(power_seen_[i])));
}

struct StepAccess {
  static std::span<double> errors(WeightState& s) { return s.errors_; }
  static std::span<std::uint8_t> gated(WeightState& s) { return s.gated_; }
};

namespace {

void check_frames(const WeightState& state, std::span<const SubbandFrame> frames) {
  for (const auto& f : frames)
    if (static_cast<int>(f.regressor.size()) != state.filter_len())
      throw InvalidArgument("regressor length " + std::to_string(f.regressor.size()) +
                            " does not match filter length " +
                            std::to_string(state.filter_len()));
}

bool all_finite(std::span<const double> errors, std::span<const SubbandFrame> frames) {
  for (double e : errors)
    if (!std::isfinite(e)) return false;
  for (const auto& f : frames)
    if (!std::isfinite(kernels::sum_squares(f.regressor))) return false;
  return true;
}

// Shared by TLS-NSAF and TLMM-NSAF so the two stay bit-identical when no
// subband is gated.
StepReport tls_family_update(WeightState& state, std::span<const SubbandFrame> frames,
                             double step, Gate gate, double eps) {
  if (state.filter_len() <= 2) throw InvalidArgument("TLS update needs filter_len > 2");
  if (!(state.theta() > 0.0)) throw ThetaUndefined();

  auto errors = StepAccess::errors(state);
  auto gated = StepAccess::gated(state);
  subband_errors(state, frames, errors);

  StepReport report;
  if (!all_finite(errors, frames)) {
    report.nonfinite = true;
    return report;
  }

  const auto n = frames.size();
  for (std::size_t i = 0; i < n; ++i) {
    state.observe_power(static_cast<int>(i), frames[i].regressor);
    const double xi = state.scale_state(static_cast<int>(i)).observe(errors[i]);
    gated[i] = (gate == Gate::robust && !(std::abs(errors[i]) < xi)) ? 1 : 0;
    report.gated += gated[i];
  }
  if (report.gated == static_cast<int>(n)) return report;

  const double wbar = state.wbar_norm_sq();
  const double lm2 = static_cast<double>(state.filter_len() - 2);
  double self_gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gated[i]) continue;
    const double c = step / (wbar * wbar * lm2 * (state.subband_power(static_cast<int>(i)) + eps));
    self_gain += c * errors[i] * errors[i];
  }
  // The e^2 w terms use w(z), so scale first, then add the regressor terms.
  kernels::scale(state.taps(), 1.0 + self_gain);
  for (std::size_t i = 0; i < n; ++i) {
    if (gated[i]) continue;
    const double c = step / (wbar * wbar * lm2 * (state.subband_power(static_cast<int>(i)) + eps));
    kernels::axpy(state.taps(), c * wbar * errors[i], frames[i].regressor);
  }
  return report;
}

// NSAF, optionally with the M-estimate gate (M-NSAF).
StepReport nsaf_update(WeightState& state, std::span<const SubbandFrame> frames, double step,
                       Gate gate, double eps) {
  auto errors = StepAccess::errors(state);
  auto gated = StepAccess::gated(state);
  subband_errors(state, frames, errors);

  StepReport report;
  if (!all_finite(errors, frames)) {
    report.nonfinite = true;
    return report;
  }
  const auto n = frames.size();
  for (std::size_t i = 0; i < n; ++i) {
    gated[i] = 0;
    if (gate == Gate::robust) {
      const double xi = state.scale_state(static_cast<int>(i)).observe(errors[i]);
      gated[i] = std::abs(errors[i]) < xi ? 0 : 1;
      report.gated += gated[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (gated[i]) continue;
    const double energy = kernels::sum_squares(frames[i].regressor);
    kernels::axpy(state.taps(), step * errors[i] / (energy + eps), frames[i].regressor);
  }
  return report;
}

}  // namespace

void subband_errors(const WeightState& state, std::span<const SubbandFrame> frames,
                    std::span<double> out) {
  check_frames(state, frames);
  if (out.size() < frames.size()) throw InvalidArgument("subband_errors: output too short");
  for (std::size_t i = 0; i < frames.size(); ++i)
    out[i] = frames[i].desired - kernels::dot(frames[i].regressor, state.taps());
}

std::vector<double> subband_errors(const WeightState& state, std::span<const SubbandFrame> frames) {
  std::vector<double> out(frames.size());
  subband_errors(state, frames, out);
  return out;
}

StepReport step_tlmm(WeightState& state, std::span<const SubbandFrame> frames, double step,
                     Gate gate, double regularization) {
  if (static_cast<int>(frames.size()) != state.num_subbands())
    throw InvalidArgument("step_tlmm: expected one frame per subband");
  return tls_family_update(state, frames, step, gate, regularization);
}

StepReport step_baseline(WeightState& state, std::span<const SubbandFrame> frames,
                         const AlgoParams& params) {
  if (static_cast<int>(frames.size()) != state.num_subbands())
    throw InvalidArgument("step_baseline: expected one frame per subband");
  switch (params.kind) {
    case Algorithm::nlms:
      if (frames.size() != 1) throw InvalidArgument("nlms runs on a single full-band frame");
      return nsaf_update(state, frames, params.step, Gate::off, params.regularization);
    case Algorithm::nsaf:
      return nsaf_update(state, frames, params.step, Gate::off, params.regularization);
    case Algorithm::m_nsaf:
      return nsaf_update(state, frames, params.step, Gate::robust, params.regularization);
    case Algorithm::tls_nsaf:
      return tls_family_update(state, frames, params.step, Gate::off, params.regularization);
    case Algorithm::tlmm_nsaf:
      return tls_family_update(state, frames, params.step, Gate::robust, params.regularization);
    default:
      throw InvalidArgument("step_baseline: " + std::string(to_string(params.kind)) +
                            " is a combination/variable-step algorithm");
  }
}

}  // namespace saflab
