#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ser/error.hpp"

namespace ser::dsp {

// Mono PCM audio scaled into [-1, 1].
struct AudioSignal {
  std::vector<float> samples;
  int sample_rate_hz = 16000;
  std::string source_path;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

bool is_supported_rate(int sample_rate_hz);

class WavError : public DataError {
 public:
  enum class Kind { kUnreadable, kMalformed, kNotPcm, kBitDepth, kMultichannel, kUnsupportedRate };

  WavError(Kind kind, std::string path, const std::string& detail);

  Kind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

// Reads a RIFF/WAVE file holding 16-bit PCM mono audio at 8 or 16 kHz.
AudioSignal load_wav(const std::filesystem::path& path);

// Parses an in-memory RIFF/WAVE image; `path` only labels errors.
AudioSignal parse_wav(std::span<const unsigned char> bytes, const std::string& path);

// Writes 16-bit PCM mono. Samples are clamped to [-1, 1] and rounded to
// the nearest code; +1.0 maps to 32767.
void write_wav(const std::filesystem::path& path, std::span<const float> samples, int sample_rate_hz);

std::vector<unsigned char> encode_wav(std::span<const float> samples, int sample_rate_hz);

}  // namespace ser::dsp
