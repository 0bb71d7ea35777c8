#include "saflab/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "saflab/errors.hpp"

namespace saflab {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void put_tag(std::vector<unsigned char>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

}  // namespace

std::vector<double> load_wav(const std::filesystem::path& path, WavInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAVE file: " + path.string());

  bool have_fmt = false;
  WavInfo fmt;
  std::uint16_t format_code = 0;
  const unsigned char* data = nullptr;
  std::size_t data_bytes = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* hdr = buf.data() + pos;
    const std::size_t size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) throw IoError("truncated chunk in " + path.string());
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("short fmt chunk in " + path.string());
      format_code = le16(buf.data() + body);
      fmt.channels = le16(buf.data() + body + 2);
      fmt.sample_rate = static_cast<int>(le32(buf.data() + body + 4));
      fmt.bits_per_sample = le16(buf.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = buf.data() + body;
      data_bytes = size;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt || data == nullptr) throw IoError("missing fmt or data chunk in " + path.string());
  if (format_code != 1) throw UnsupportedFormat("only PCM (format 1) WAV is supported");
  if (fmt.channels != 1)
    throw UnsupportedFormat("only mono WAV is supported (got " + std::to_string(fmt.channels) +
                            " channels)");
  if (fmt.bits_per_sample != 16) throw UnsupportedFormat("only 16-bit WAV is supported");
  if (data_bytes < 2) throw IoError("empty data chunk in " + path.string());

  std::vector<double> out(data_bytes / 2);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto raw = static_cast<std::int16_t>(le16(data + 2 * k));
    out[k] = static_cast<double>(raw) / 32768.0;
  }
  if (info) *info = fmt;
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate, std::string_view comment) {
  std::vector<unsigned char> info;
  if (!comment.empty()) {
    std::string text(comment);
    text.push_back('\0');
    if (text.size() & 1) text.push_back('\0');
    put_tag(info, "LIST");
    put32(info, static_cast<std::uint32_t>(4 + 8 + text.size()));
    put_tag(info, "INFO");
    put_tag(info, "ICMT");
    put32(info, static_cast<std::uint32_t>(text.size()));
    info.insert(info.end(), text.begin(), text.end());
  }

  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<unsigned char> b;
  b.reserve(44 + info.size() + data_bytes);
  put_tag(b, "RIFF");
  put32(b, static_cast<std::uint32_t>(4 + 24 + info.size() + 8 + data_bytes));
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put32(b, 16);
  put16(b, 1);
  put16(b, 1);
  put32(b, static_cast<std::uint32_t>(sample_rate));
  put32(b, static_cast<std::uint32_t>(sample_rate * 2));
  put16(b, 2);
  put16(b, 16);
  b.insert(b.end(), info.begin(), info.end());
  put_tag(b, "data");
  put32(b, data_bytes);
  for (double x : samples) {
    const double c = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(c)));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace saflab
