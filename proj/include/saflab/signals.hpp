#pragma once
// Input/noise generators and the errors-in-variables observation model.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace saflab {

// Gaussian background plus Bernoulli-gated Gaussian impulses:
//   n(k) = g(k) + b(k) * i(k),  g ~ N(0, s2), b ~ Bernoulli(p), i ~ N(0, kappa * s2)
struct NoiseSpec {
  double gaussian_variance = 0.0;
  double impulse_probability = 0.0;
  double impulse_variance_ratio = 0.0;

  void validate() const;
  double total_variance() const {
    return gaussian_variance * (1.0 + impulse_probability * impulse_variance_ratio);
  }

  static NoiseSpec gaussian(double variance) { return {variance, 0.0, 0.0}; }
};

struct InputKind {
  enum class Type { white, ar1 };
  Type type = Type::white;
  double coefficient = 0.0;  // AR(1) pole, |a| < 1

  static InputKind white() { return {Type::white, 0.0}; }
  static InputKind ar1(double a) { return {Type::ar1, a}; }
};

// Zero-mean Gaussian sequence. For ar1, `variance` is the driving-noise
// variance and the output is that noise filtered by 1/(1 - a c^-1), started
// from the stationary distribution.
std::vector<double> gen_input(InputKind kind, double variance, std::size_t length,
                              std::uint64_t seed);

std::vector<double> gen_noise(const NoiseSpec& spec, std::size_t length, std::uint64_t seed);

struct EivStream {
  std::vector<double> clean_input;
  std::vector<double> noisy_input;
  std::vector<double> clean_desired;
  std::vector<double> noisy_desired;
  std::vector<double> plant;
  // sigma_o^2 / sigma_in^2 from the Gaussian parts; empty when sigma_in^2 = 0.
  std::optional<double> theta;

  // Throws ThetaUndefined when theta is empty.
  double require_theta() const;
};

// d(n) = h^T x(n) with zero history before n = 0; x~ = x + u, d~ = d + v.
// Input noise and output noise come from separate RNG substreams of `seed`.
EivStream make_eiv_stream(std::span<const double> plant, std::span<const double> input,
                          const NoiseSpec& input_noise, const NoiseSpec& output_noise,
                          std::uint64_t seed);

// Uniform on [-0.5, 0.5], rescaled to unit energy.
std::vector<double> random_plant(std::size_t length, std::uint64_t seed);

// Random taps under an exponential envelope exp(-n / (decay * length)),
// rescaled to unit energy. Stand-in room echo path.
std::vector<double> decaying_echo_path(std::size_t length, std::uint64_t seed,
                                       double decay = 0.2);

// Speech-like test signal at 8 kHz: formant-filtered noise with syllabic
// amplitude envelope and short pauses, normalized to unit variance.
std::vector<double> synth_speech(std::size_t length, std::uint64_t seed);

// Deterministic substream seed for (base seed, trial index, stream id).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream);

// Stream ids used by make_eiv_stream and the experiment harness.
namespace streams {
inline constexpr std::uint64_t kPlant = 1;
inline constexpr std::uint64_t kInput = 2;
inline constexpr std::uint64_t kInputNoise = 3;
inline constexpr std::uint64_t kOutputNoise = 4;
}  // namespace streams

}  // namespace saflab
