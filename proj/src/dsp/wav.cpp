#include "ser/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ser::dsp {

namespace {

constexpr uint16_t kFormatPcm = 0x0001;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t read_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

const char* kind_label(WavError::Kind kind) {
  switch (kind) {
    case WavError::Kind::kUnreadable:
      return "unreadable file";
    case WavError::Kind::kMalformed:
      return "malformed RIFF/WAVE";
    case WavError::Kind::kNotPcm:
      return "non-PCM encoding";
    case WavError::Kind::kBitDepth:
      return "unsupported bit depth";
    case WavError::Kind::kMultichannel:
      return "multichannel audio";
    case WavError::Kind::kUnsupportedRate:
      return "unsupported sample rate";
  }
  return "wav error";
}

}  // namespace

bool is_supported_rate(int sample_rate_hz) { return sample_rate_hz == 8000 || sample_rate_hz == 16000; }

WavError::WavError(Kind kind, std::string path, const std::string& detail)
    : DataError(std::string(kind_label(kind)) + ": " + path + (detail.empty() ? "" : " (" + detail + ")")),
      kind_(kind),
      path_(std::move(path)) {}

AudioSignal parse_wav(std::span<const unsigned char> bytes, const std::string& path) {
  using K = WavError::Kind;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(K::kMalformed, path, "missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw WavError(K::kMalformed, path, "short fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible && size >= 40) {
        // Sub-format GUID starts with the real format tag.
        format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Tolerate writers that leave a streaming placeholder size.
      data_len = std::min<std::size_t>(size, avail);
      break;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw WavError(K::kMalformed, path, "no fmt chunk");
  if (data == nullptr) throw WavError(K::kMalformed, path, "no data chunk");
  if (format != kFormatPcm) throw WavError(K::kNotPcm, path, "format tag " + std::to_string(format));
  if (bits != 16) throw WavError(K::kBitDepth, path, std::to_string(bits) + " bits");
  if (channels != 1) throw WavError(K::kMultichannel, path, std::to_string(channels) + " channels");
  if (!is_supported_rate(static_cast<int>(rate))) {
    throw WavError(K::kUnsupportedRate, path, std::to_string(rate) + " Hz");
  }

  if (data_len < 2) throw WavError(K::kMalformed, path, "empty data chunk");

  AudioSignal sig;
  sig.sample_rate_hz = static_cast<int>(rate);
  sig.source_path = path;
  const std::size_t n = data_len / 2;
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto code = static_cast<int16_t>(read_u16(data + 2 * i));
    sig.samples[i] = static_cast<float>(code) / 32768.0f;
  }
  return sig;
}

AudioSignal load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavError::Kind::kUnreadable, path.string(), "cannot open");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw WavError(WavError::Kind::kUnreadable, path.string(), "read failure");
  return parse_wav(bytes, path.string());
}

std::vector<unsigned char> encode_wav(std::span<const float> samples, int sample_rate_hz) {
  if (!is_supported_rate(sample_rate_hz)) {
    throw ConfigError("unsupported sample rate " + std::to_string(sample_rate_hz));
  }
  const auto data_bytes = static_cast<uint32_t>(samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<uint32_t>(sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : samples) {
    const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const long code = std::lround(clamped * 32768.0);
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(std::clamp(code, -32768L, 32767L))));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples, int sample_rate_hz) {
  const auto bytes = encode_wav(samples, sample_rate_hz);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace ser::dsp
