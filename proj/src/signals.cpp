#include "saflab/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "saflab/errors.hpp"

namespace saflab {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void normalize_energy(std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  if (e > 0.0) {
    const double g = 1.0 / std::sqrt(e);
    for (double& x : v) x *= g;
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(base) ^ (trial * 0xD1B54A32D192ED03ull)) ^
                    (stream * 0x8CB92BA72F3D8DD7ull));
}

void NoiseSpec::validate() const {
  if (!(gaussian_variance >= 0.0) || !(impulse_variance_ratio >= 0.0))
    throw InvalidArgument("NoiseSpec: variances must be >= 0");
  if (!(impulse_probability >= 0.0 && impulse_probability <= 1.0))
    throw InvalidArgument("NoiseSpec: impulse probability must lie in [0, 1]");
}

std::vector<double> gen_input(InputKind kind, double variance, std::size_t length,
                              std::uint64_t seed) {
  if (!(variance >= 0.0)) throw InvalidArgument("gen_input: variance must be >= 0");
  if (kind.type == InputKind::Type::ar1 && !(std::abs(kind.coefficient) < 1.0))
    throw InvalidArgument("gen_input: AR(1) coefficient must satisfy |a| < 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sd = std::sqrt(variance);
  std::vector<double> out(length);
  if (kind.type == InputKind::Type::white) {
    for (auto& x : out) x = sd * gauss(rng);
    return out;
  }
  const double a = kind.coefficient;
  double state = sd / std::sqrt(1.0 - a * a) * gauss(rng);
  for (auto& x : out) {
    state = a * state + sd * gauss(rng);
    x = state;
  }
  return out;
}

std::vector<double> gen_noise(const NoiseSpec& spec, std::size_t length, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double sd = std::sqrt(spec.gaussian_variance);
  const double isd = std::sqrt(spec.impulse_variance_ratio * spec.gaussian_variance);
  const bool impulsive = spec.impulse_probability > 0.0 && isd > 0.0;
  std::vector<double> out(length);
  for (auto& x : out) {
    x = sd * gauss(rng);
    if (impulsive && unif(rng) < spec.impulse_probability) x += isd * gauss(rng);
  }
  return out;
}

double EivStream::require_theta() const {
  if (!theta || !(*theta > 0.0)) throw ThetaUndefined();
  return *theta;
}

EivStream make_eiv_stream(std::span<const double> plant, std::span<const double> input,
                          const NoiseSpec& input_noise, const NoiseSpec& output_noise,
                          std::uint64_t seed) {
  if (plant.size() < 3) throw InvalidArgument("make_eiv_stream: plant length must be >= 3");
  input_noise.validate();
  output_noise.validate();

  EivStream s;
  s.plant.assign(plant.begin(), plant.end());
  s.clean_input.assign(input.begin(), input.end());
  const std::size_t n = input.size();

  s.clean_desired.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    const std::size_t taps = std::min(plant.size(), t + 1);
    for (std::size_t k = 0; k < taps; ++k) acc += plant[k] * input[t - k];
    s.clean_desired[t] = acc;
  }

  const auto u = gen_noise(input_noise, n, derive_seed(seed, 0, streams::kInputNoise));
  const auto v = gen_noise(output_noise, n, derive_seed(seed, 0, streams::kOutputNoise));
  s.noisy_input.resize(n);
  s.noisy_desired.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    s.noisy_input[t] = s.clean_input[t] + u[t];
    s.noisy_desired[t] = s.clean_desired[t] + v[t];
  }
  if (input_noise.gaussian_variance > 0.0)
    s.theta = output_noise.gaussian_variance / input_noise.gaussian_variance;
  return s;
}

std::vector<double> random_plant(std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  std::vector<double> h(length);
  for (auto& x : h) x = unif(rng);
  normalize_energy(h);
  return h;
}

std::vector<double> decaying_echo_path(std::size_t length, std::uint64_t seed, double decay) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> h(length);
  const double tau = std::max(decay * static_cast<double>(length), 1e-9);
  for (std::size_t n = 0; n < length; ++n) h[n] = gauss(rng) * std::exp(-static_cast<double>(n) / tau);
  normalize_energy(h);
  return h;
}

std::vector<double> synth_speech(std::size_t length, std::uint64_t seed) {
  constexpr double kFs = 8000.0;
  constexpr std::size_t kFrame = 160;  // formants retuned every 20 ms
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Two cascaded resonators.
  double f1 = 500.0, f2 = 1500.0;
  double a1[2] = {0, 0}, a2[2] = {0, 0};
  double y1[2] = {0, 0}, y2[2] = {0, 0};
  auto retune = [&](double f, double r, double* a) {
    a[0] = 2.0 * r * std::cos(2.0 * std::numbers::pi * f / kFs);
    a[1] = -r * r;
  };

  std::vector<double> out(length);
  std::size_t seg_left = 0;
  std::size_t seg_len = 1;
  bool voiced = false;
  for (std::size_t n = 0; n < length; ++n) {
    if (n % kFrame == 0) {
      f1 = std::clamp(f1 + 120.0 * gauss(rng), 250.0, 900.0);
      f2 = std::clamp(f2 + 250.0 * gauss(rng), 900.0, 2800.0);
      retune(f1, 0.96, a1);
      retune(f2, 0.93, a2);
    }
    if (seg_left == 0) {
      voiced = !voiced;
      seg_len = voiced ? static_cast<std::size_t>(kFs * (0.15 + 0.2 * unif(rng)))
                       : static_cast<std::size_t>(kFs * (0.05 + 0.15 * unif(rng)));
      seg_left = seg_len;
    }
    const double phase = 1.0 - static_cast<double>(seg_left) / static_cast<double>(seg_len);
    const double env = voiced ? std::sin(std::numbers::pi * phase) : 0.03;
    --seg_left;

    const double e = gauss(rng);
    const double s1 = e + a1[0] * y1[0] + a1[1] * y1[1];
    y1[1] = y1[0];
    y1[0] = s1;
    const double s2 = s1 + a2[0] * y2[0] + a2[1] * y2[1];
    y2[1] = y2[0];
    y2[0] = s2;
    out[n] = env * s2;
  }

  double mean = 0.0, var = 0.0;
  for (double x : out) mean += x;
  if (length > 0) mean /= static_cast<double>(length);
  for (double x : out) var += (x - mean) * (x - mean);
  if (length > 0 && var > 0.0) {
    const double g = 1.0 / std::sqrt(var / static_cast<double>(length));
    for (double& x : out) x = (x - mean) * g;
  }
  return out;
}

}  // namespace saflab
