#pragma once
// Monte-Carlo harness: system identification, echo cancellation and the
// theory-vs-simulation table. Trials are independent and run on a small
// thread pool; results depend only on the seed, not on scheduling.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "saflab/algorithms.hpp"
#include "saflab/signals.hpp"

namespace saflab {

struct VssSettings {
  double alpha = 0.99;
  double beta = 0.0058;
  // Empty: mu_max = 0.5 * ms bound, mu_min = mu2.
  std::optional<double> mu_max;
  std::optional<double> mu_min;
};

struct SweepSettings {
  std::vector<double> steps{0.05, 0.1};
  std::vector<double> noise_vars{0.02, 0.05};
};

struct ExperimentConfig {
  std::vector<Algorithm> algorithms{Algorithm::tls_nsaf, Algorithm::tlmm_nsaf};
  int filter_len = 128;
  int num_subbands = 4;
  int proto_len = 0;  // 0 means 8 * num_subbands
  double step = 0.5;

  double mu2 = 0.05;       // slow branch of the combinations
  double mu_alpha = 0.02;  // mixing adaptation
  VssSettings vss;

  InputKind input = InputKind::white();
  double input_variance = 1.0;
  NoiseSpec input_noise = NoiseSpec::gaussian(0.05);
  NoiseSpec output_noise = NoiseSpec::gaussian(0.05);

  RobustScaleConfig robust;
  double power_forgetting = 0.99;
  double regularization = 1e-6;
  // Inject probed subband powers instead of tracking them.
  bool fixed_powers = false;

  int trials = 10;
  int iters = 5000;  // decimated iterations
  std::uint64_t seed = 1;

  SweepSettings sweep;
  std::string wav;          // AEC far-end signal; empty means synthetic speech
  double echo_decay = 0.2;  // AEC echo-path envelope

  std::string out = "out";

  void validate() const;
  int effective_proto_len() const { return proto_len > 0 ? proto_len : 8 * num_subbands; }
};

// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
// FNV-1a of the canonical (sorted-key, compact) JSON of the config, minus
// the output directory.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hash_hex(std::uint64_t h);

inline constexpr double kNmsdFloorDb = -300.0;
inline constexpr double kDivergenceDb = 100.0;

// 10 log10(|w - h|^2 / |h|^2), floored at -300 dB. Throws DegeneratePlant for
// h = 0 and InvalidArgument for a length mismatch.
double nmsd(std::span<const double> weights, std::span<const double> plant);

struct NmsdTrace {
  std::string label;
  std::vector<double> db;  // one value per decimated iteration
  int trials = 0;
  int diverged = 0;  // trials that crossed +100 dB or went non-finite
  std::uint64_t config_hash = 0;

  // Ranges visited by the adaptive parameters, when the algorithm has them.
  std::optional<double> lambda_min, lambda_max, mu_vss_min, mu_vss_max;

  // Mean over the final 10% of iterations.
  double steady_state_db() const;
  // First iteration whose value is <= level_db, or nullopt.
  std::optional<int> first_reaching(double level_db) const;
};

struct TrialTraces {
  std::vector<NmsdTrace> traces;  // one per algorithm, trials = 1
};

// One trial: every algorithm sees the same plant and noise realization.
// Diverged runs hold +100 dB from the divergence point on.
TrialTraces run_sysid_trial(const ExperimentConfig& config, int trial);

// Mean of the per-trial dB traces.
std::vector<NmsdTrace> run_sysid(const ExperimentConfig& config);

struct AecResult {
  std::vector<NmsdTrace> traces;
  // Trial 0 residual e(n) = d~(n) - y(n) per algorithm, full-band.
  std::vector<std::vector<double>> residuals;
};

// Far-end from config.wav (or synthetic speech), echo path of length L with
// an exponential envelope; NMSD is measured against the echo path.
AecResult run_aec(const ExperimentConfig& config);
// Same, with an explicit far-end signal and echo path.
AecResult run_aec(const ExperimentConfig& config, std::span<const double> far_end,
                  std::span<const double> echo_path);

struct TheoryRow {
  double step = 0.0;
  double noise_var = 0.0;
  bool stable = true;
  double predicted_db = 0.0;
  double simulated_db = 0.0;
  double gap_db = 0.0;
};

// Grid over sweep.steps x sweep.noise_vars (sigma_in^2 = sigma_o^2), using
// TLMM-NSAF with probed subband powers injected.
std::vector<TheoryRow> theory_vs_sim(const ExperimentConfig& config);

// SAFLAB_THREADS if set (>= 1), else hardware concurrency.
int worker_count(int jobs);

}  // namespace saflab
