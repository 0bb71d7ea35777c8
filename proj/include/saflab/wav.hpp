#pragma once
// RIFF/WAVE, PCM format 1, mono, 16-bit little-endian.

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace saflab {

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
};

// Samples scaled by 1/32768, so -32768 maps to -1.0 exactly.
// Throws UnsupportedFormat for anything but mono 16-bit PCM, IoError for
// unreadable, truncated or empty files.
std::vector<double> load_wav(const std::filesystem::path& path, WavInfo* info = nullptr);

// Clamps to [-1, 32767/32768]. A non-empty comment goes into a LIST/INFO ICMT
// chunk.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate = 8000, std::string_view comment = {});

}  // namespace saflab
