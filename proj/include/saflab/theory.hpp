#pragma once
// Local analysis of TLMM-NSAF around the true plant: gradient and Hessian at
// h, step-size bounds, gradient-noise moment matrix and the steady-state MSD
// predictor.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "saflab/filterbank.hpp"
#include "saflab/signals.hpp"

namespace saflab {

struct PlantModel {
  Eigen::VectorXd h;
  double theta = 0.0;
  // Full-band input covariance E[x x^T]; may be left empty.
  Eigen::MatrixXd input_cov;
  // Per subband: input-noise power, noisy input power, gamma and (optionally)
  // the smallest eigenvalue of the normalized subband covariance.
  std::vector<double> input_noise_var;
  std::vector<double> noisy_subband_power;
  std::vector<double> gammas;
  std::vector<double> alpha_min;

  int filter_len() const { return static_cast<int>(h.size()); }
  int num_subbands() const { return static_cast<int>(gammas.size()); }
  double hbar_norm_sq() const { return h.squaredNorm() + theta; }

  // Sizes, positivity, sigma_x~^2 > sigma_in^2 and R symmetric PSD. Requires
  // L > min_filter_len.
  void validate(int min_filter_len = 4) const;
};

struct CriticalPoint {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd eigenvalues;  // ascending
};

// Expected gradient at w = h built from E[e^2] = |h_bar|^2 sigma_in^2 and
// E[e x~] = -sigma_in^2 h (zero by construction), and the Hessian
//   (1/|h_bar|^2) [sum gamma_i - sum sigma_in,i^2 / ((L-2) sigma_x~,i^2)] I.
CriticalPoint hessian_and_gradient_at_h(const PlantModel& plant);

struct StepBounds {
  double mean_bound;    // 2 / lambda_max(H)
  double ms_bound;      // 2 (|h|^2 + theta)
  double stable_bound;  // min of the two
};

// Throws NoLocalMinimum when H is not positive definite.
StepBounds step_bounds(const PlantModel& plant);

// E[r(h) r(h)^T] =
//   sum sigma_in^2 gamma I / (|h_bar|^2 (L-4) sigma_x~^2)
//   - sum 3 sigma_in^4 h h^T / (|h_bar|^4 (L-2) (L-4) sigma_x~^2)
Eigen::MatrixXd moment_matrix(const PlantModel& plant);

enum class MsdMethod {
  automatic,  // dense for L <= kDenseAutoLimit, eigen otherwise
  dense,      // materializes P (L <= kDenseMaxLen)
  eigen,      // via the eigen-decomposition of H
};

inline constexpr int kDenseAutoLimit = 32;
inline constexpr int kDenseMaxLen = 64;

struct MsdPrediction {
  Eigen::MatrixXd moment_M;
  Eigen::MatrixXd transition_P;  // empty unless the dense path ran
  double spectral_radius = 0.0;  // of P
  double predicted_msd = 0.0;    // E|h - w(inf)|^2
  bool dense = false;
};

// msd = mu^2 vec(M)^T (I - P)^-1 vec(I), P = (I - mu H) kron (I - mu H).
// Throws UnstableStep if rho(P) >= 1, IllConditioned if I - P has
// reciprocal condition below 1e-12.
MsdPrediction steady_state_msd(const PlantModel& plant, double step,
                               MsdMethod method = MsdMethod::automatic);

enum class GammaKind { white, correlated };

// white: 1/L. correlated: covariance scaled to unit trace, gamma is the mean
// of its smallest eigenvalue and 1/L.
double estimate_gamma(const Eigen::MatrixXd& subband_cov, GammaKind kind);
// Smallest eigenvalue of the unit-trace normalized covariance.
double normalized_min_eigenvalue(const Eigen::MatrixXd& subband_cov);

struct ProbeOptions {
  std::size_t length = 1u << 18;
  std::uint64_t seed = 0x70b5e5eedULL;
};

struct SubbandProbe {
  std::vector<double> white_power;  // P_i for unit-variance white noise
  std::vector<double> input_power;  // P_i for the input process
  std::vector<double> gamma;
  std::vector<double> alpha_min;
};

// Pushes a white probe and (for AR(1)) an input-process probe through each
// branch; covariances are estimated over L-sample newest-first regressors.
SubbandProbe probe_subbands(const AnalysisBank& bank, int filter_len, InputKind input,
                            double input_variance, ProbeOptions probe = {});

// Subband powers measured by running probe signals through `bank`:
//   sigma_in,i^2 = input_noise_var * P_i(white), sigma_x~,i^2 = P_i(input) +
//   sigma_in,i^2, theta = output_noise_var / input_noise_var. gamma follows
// `input`: 1/L for white, estimate_gamma on the probed subband covariance
// for AR(1).
PlantModel plant_from_bank(const AnalysisBank& bank, std::vector<double> h,
                           InputKind input, double input_variance, double input_noise_var,
                           double output_noise_var, ProbeOptions probe = {});

struct TheoryReport {
  CriticalPoint critical;
  StepBounds bounds{};
  double h_norm_sq = 0.0;
  double theta = 0.0;
  std::optional<double> step;
  std::optional<MsdPrediction> msd;
  std::optional<double> predicted_nmsd_db;
};

// Bounds always; the MSD part only when `step` is given and stable.
TheoryReport build_theory_report(const PlantModel& plant, std::optional<double> step);

// P is emitted only if materialized; large matrices are summarized by their
// diagonal.
nlohmann::json to_json(const TheoryReport& report);

}  // namespace saflab
