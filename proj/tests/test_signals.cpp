#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "saflab/errors.hpp"
#include "saflab/signals.hpp"
#include "saflab/wav.hpp"

using namespace saflab;
namespace fs = std::filesystem;

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double var(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

fs::path tmp(const std::string& name) {
  auto dir = fs::temp_directory_path() / "saflab_test_signals";
  fs::create_directories(dir);
  return dir / name;
}

void put16(std::ofstream& f, std::uint16_t v) { f.put(char(v & 0xff)).put(char(v >> 8)); }
void put32(std::ofstream& f, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) f.put(char((v >> (8 * i)) & 0xff));
}

void write_raw_wav(const fs::path& p, int channels, int bits, std::uint32_t data_bytes,
                   std::uint32_t actual_bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write("RIFF", 4);
  put32(f, 36 + data_bytes);
  f.write("WAVEfmt ", 8);
  put32(f, 16);
  put16(f, 1);
  put16(f, channels);
  put32(f, 8000);
  put32(f, 8000 * channels * bits / 8);
  put16(f, channels * bits / 8);
  put16(f, bits);
  f.write("data", 4);
  put32(f, data_bytes);
  for (std::uint32_t i = 0; i < actual_bytes; ++i) f.put(0);
}

}  // namespace

TEST_CASE("white input has the requested variance") {
  const auto x = gen_input(InputKind::white(), 1.0, 100000, 11);
  CHECK(std::abs(var(x) - 1.0) < 0.05);
  CHECK(gen_input(InputKind::white(), 1.0, 0, 11).empty());
}

TEST_CASE("AR(1) input reaches its stationary variance and correlation") {
  const auto x = gen_input(InputKind::ar1(0.8), 0.36, 100000, 12);
  CHECK(std::abs(var(x) - 1.0) < 0.05);
  double c1 = 0.0;
  for (std::size_t n = 1; n < x.size(); ++n) c1 += x[n] * x[n - 1];
  c1 /= (x.size() - 1);
  CHECK(c1 / var(x) == Catch::Approx(0.8).margin(0.02));
  CHECK_THROWS_AS(gen_input(InputKind::ar1(1.0), 1.0, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_input(InputKind::white(), -1.0, 10, 1), InvalidArgument);
}

TEST_CASE("noise generator: Gaussian, silent and Bernoulli-Gaussian") {
  CHECK(std::abs(var(gen_noise(NoiseSpec::gaussian(0.05), 100000, 3)) - 0.05) < 0.0025);
  for (double v : gen_noise(NoiseSpec{0.0, 0.0, 0.0}, 1000, 3)) CHECK(v == 0.0);
  const NoiseSpec bg{0.05, 0.01, 1000.0};
  CHECK(bg.total_variance() == Catch::Approx(0.55));
  const auto n = gen_noise(bg, 1000000, 4);
  CHECK(std::abs(var(n) - 0.55) / 0.55 < 0.10);
  std::size_t big = 0;
  for (double v : n) big += std::abs(v) > 8.0 * std::sqrt(0.05);
  CHECK(big > 5000);
  CHECK(big < 15000);
}

TEST_CASE("noise settings validation") {
  CHECK_THROWS_AS(NoiseSpec({-1.0, 0.0, 0.0}).validate(), InvalidArgument);
  CHECK_THROWS_AS(NoiseSpec({1.0, 1.5, 0.0}).validate(), InvalidArgument);
  CHECK_THROWS_AS(NoiseSpec({1.0, 0.1, -2.0}).validate(), InvalidArgument);
  CHECK_NOTHROW(NoiseSpec({0.05, 0.01, 1000.0}).validate());
}

TEST_CASE("EIV stream: plant identity, noiseless reduction and theta") {
  const auto h = random_plant(16, 5);
  const auto x = gen_input(InputKind::white(), 1.0, 5000, 6);
  const auto clean = make_eiv_stream(h, x, NoiseSpec::gaussian(0.0), NoiseSpec::gaussian(0.0), 9);
  for (std::size_t n = 0; n < x.size(); ++n) {
    double d = 0.0;
    for (std::size_t k = 0; k < h.size() && k <= n; ++k) d += h[k] * x[n - k];
    REQUIRE(clean.clean_desired[n] == d);
  }
  CHECK(clean.noisy_input == clean.clean_input);
  CHECK(clean.noisy_desired == clean.clean_desired);
  CHECK_FALSE(clean.theta.has_value());
  CHECK_THROWS_AS(clean.require_theta(), ThetaUndefined);

  std::vector<double> delta(8, 0.0);
  delta[0] = 1.0;
  const auto ident = make_eiv_stream(delta, x, NoiseSpec::gaussian(0.0),
                                     NoiseSpec::gaussian(0.0), 1);
  CHECK(ident.clean_desired == x);

  const auto noisy = make_eiv_stream(h, x, NoiseSpec::gaussian(0.05), NoiseSpec::gaussian(0.05), 9);
  REQUIRE(noisy.theta.has_value());
  CHECK(*noisy.theta == 1.0);
  CHECK_THROWS_AS(make_eiv_stream(std::vector<double>{1.0, 0.5}, x, NoiseSpec::gaussian(0.1),
                                  NoiseSpec::gaussian(0.1), 1),
                  InvalidArgument);
}

TEST_CASE("input noise is uncorrelated with the input") {
  const std::size_t n = 100000;
  const auto x = gen_input(InputKind::white(), 1.0, n, 21);
  const auto s = make_eiv_stream(random_plant(8, 1), x, NoiseSpec::gaussian(1.0),
                                 NoiseSpec::gaussian(1.0), 22);
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) c += (s.noisy_input[i] - x[i]) * x[i];
  CHECK(std::abs(c / n) < 4.0 / std::sqrt(double(n)));
  double cv = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    cv += (s.noisy_input[i] - x[i]) * (s.noisy_desired[i] - s.clean_desired[i]);
  CHECK(std::abs(cv / n) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("streams are reproducible from the seed") {
  const auto x = gen_input(InputKind::ar1(0.8), 0.36, 2000, 3);
  const auto a = make_eiv_stream(random_plant(12, 4), x, NoiseSpec{0.05, 0.01, 1000},
                                 NoiseSpec{0.05, 0.01, 1000}, 77);
  const auto b = make_eiv_stream(random_plant(12, 4), x, NoiseSpec{0.05, 0.01, 1000},
                                 NoiseSpec{0.05, 0.01, 1000}, 77);
  CHECK(a.noisy_input == b.noisy_input);
  CHECK(a.noisy_desired == b.noisy_desired);
  CHECK(gen_input(InputKind::ar1(0.8), 0.36, 2000, 3) == x);
}

TEST_CASE("plants and echo paths are unit energy") {
  for (auto h : {random_plant(128, 1), decaying_echo_path(128, 2)}) {
    double e = 0.0;
    for (double v : h) e += v * v;
    CHECK(e == Catch::Approx(1.0).epsilon(1e-12));
  }
  const auto h = random_plant(64, 9);
  for (double v : h) CHECK(std::abs(v) <= 0.5 / std::sqrt(64.0 / 12.0) * 3.0);
  CHECK(random_plant(64, 9) == h);
  CHECK(random_plant(64, 10) != h);

  const auto echo = decaying_echo_path(128, 3);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 64; ++i) head += echo[i] * echo[i];
  for (int i = 64; i < 128; ++i) tail += echo[i] * echo[i];
  CHECK(head > 10.0 * tail);
}

TEST_CASE("synthetic speech is unit variance and deterministic") {
  const auto s = synth_speech(40000, 8);
  CHECK(var(s) == Catch::Approx(1.0).epsilon(0.02));
  CHECK(synth_speech(40000, 8) == s);
}

TEST_CASE("seed derivation separates trials and streams") {
  CHECK(derive_seed(1, 0, streams::kPlant) != derive_seed(1, 1, streams::kPlant));
  CHECK(derive_seed(1, 0, streams::kPlant) != derive_seed(1, 0, streams::kInput));
  CHECK(derive_seed(1, 0, streams::kPlant) != derive_seed(2, 0, streams::kPlant));
  CHECK(derive_seed(5, 6, 7) == derive_seed(5, 6, 7));
}

TEST_CASE("wav round trip keeps length, quantized values and the comment") {
  const auto p = tmp("round.wav");
  std::vector<double> s{0.0, 0.5, -0.5, -1.0, 0.999, 2.0, -3.0};
  write_wav(p, s, 8000, "config=abc");
  WavInfo info;
  const auto back = load_wav(p, &info);
  CHECK(info.sample_rate == 8000);
  CHECK(info.channels == 1);
  CHECK(info.bits_per_sample == 16);
  REQUIRE(back.size() == s.size());
  CHECK(back[0] == 0.0);
  CHECK(back[1] == 0.5);
  CHECK(back[3] == -1.0);
  CHECK(back[5] == 32767.0 / 32768.0);
  CHECK(back[6] == -1.0);
  std::ifstream f(p, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)), {});
  CHECK(bytes.find("ICMT") != std::string::npos);
  CHECK(bytes.find("config=abc") != std::string::npos);
}

TEST_CASE("wav loader rejects what it cannot read") {
  CHECK_THROWS_AS(load_wav(tmp("missing.wav")), IoError);
  const auto stereo = tmp("stereo.wav");
  write_raw_wav(stereo, 2, 16, 8, 8);
  CHECK_THROWS_AS(load_wav(stereo), UnsupportedFormat);
  const auto eight = tmp("eight.wav");
  write_raw_wav(eight, 1, 8, 4, 4);
  CHECK_THROWS_AS(load_wav(eight), UnsupportedFormat);
  const auto trunc = tmp("trunc.wav");
  write_raw_wav(trunc, 1, 16, 100, 10);
  CHECK_THROWS_AS(load_wav(trunc), IoError);
  const auto empty = tmp("empty.wav");
  std::ofstream(empty).close();
  CHECK_THROWS_AS(load_wav(empty), IoError);
}
