#include "ser/dsp/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace ser::dsp {

namespace {

Grid stack_deltas(const Grid& log_mel, bool use_deltas, int delta_window) {
  if (log_mel.rows() < 1 || log_mel.cols() < 1) throw ShapeError("empty log-mel grid");
  if (!use_deltas) return log_mel;
  const Grid d1 = compute_deltas(log_mel, delta_window);
  const Grid d2 = compute_deltas(d1, delta_window);
  const Eigen::Index m = log_mel.cols();
  Grid out(log_mel.rows(), 3 * m);
  out.leftCols(m) = log_mel;
  out.middleCols(m, m) = d1;
  out.rightCols(m) = d2;
  return out;
}

void check_stats(const NormStats& stats, Eigen::Index dims) {
  if (static_cast<Eigen::Index>(stats.mean.size()) != dims ||
      static_cast<Eigen::Index>(stats.stddev.size()) != dims) {
    throw ShapeError("normalization statistics have " + std::to_string(stats.mean.size()) + " dims, features have " +
                     std::to_string(dims));
  }
}

double divisor(double sd) { return sd > 0.0 ? sd : 1.0; }

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

FeatureMatrix assemble_features(const Grid& log_mel, bool use_deltas, int delta_window) {
  FeatureMatrix fm;
  fm.values = stack_deltas(log_mel, use_deltas, delta_window).cast<float>();
  return fm;
}

FeatureMatrix assemble_features(const Grid& log_mel, bool use_deltas, const NormStats& stats, int delta_window) {
  Grid raw = stack_deltas(log_mel, use_deltas, delta_window);
  check_stats(stats, raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    raw.col(j) = (raw.col(j).array() - stats.mean[j]) / divisor(stats.stddev[j]);
  }
  FeatureMatrix fm;
  fm.values = raw.cast<float>();
  return fm;
}

NormStats compute_norm_stats(std::span<const FeatureMatrix* const> matrices) {
  if (matrices.empty()) throw ShapeError("normalization statistics need at least one matrix");
  const Eigen::Index dims = matrices.front()->values.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dims);
  long long count = 0;
  for (const FeatureMatrix* m : matrices) {
    if (m->values.cols() != dims) throw ShapeError("feature matrices disagree on dimension");
    sum += m->values.cast<double>().colwise().sum().transpose();
    count += m->values.rows();
  }
  if (count == 0) throw ShapeError("normalization statistics over zero frames");
  const Eigen::VectorXd mean = sum / static_cast<double>(count);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dims);
  for (const FeatureMatrix* m : matrices) {
    const Eigen::MatrixXd centered = m->values.cast<double>().rowwise() - mean.transpose();
    sq += centered.array().square().colwise().sum().matrix().transpose();
  }
  NormStats stats;
  stats.mean.assign(mean.data(), mean.data() + dims);
  stats.stddev.resize(dims);
  for (Eigen::Index j = 0; j < dims; ++j) stats.stddev[j] = std::sqrt(sq[j] / static_cast<double>(count));
  return stats;
}

NormStats compute_norm_stats(std::span<const FeatureMatrix> matrices) {
  std::vector<const FeatureMatrix*> ptrs;
  ptrs.reserve(matrices.size());
  for (const auto& m : matrices) ptrs.push_back(&m);
  return compute_norm_stats(std::span<const FeatureMatrix* const>(ptrs));
}

void normalize_in_place(FeatureMatrix& features, const NormStats& stats) {
  check_stats(stats, features.values.cols());
  for (Eigen::Index j = 0; j < features.values.cols(); ++j) {
    const double mu = stats.mean[j];
    const double inv = 1.0 / divisor(stats.stddev[j]);
    for (Eigen::Index t = 0; t < features.values.rows(); ++t) {
      features.values(t, j) = static_cast<float>((features.values(t, j) - mu) * inv);
    }
  }
}

FeatureMatrix featurize(const AudioSignal& signal, const FeatureConfig& cfg) {
  const int sr = signal.sample_rate_hz;
  const Grid mag = stft_magnitude(signal, cfg.stft);
  const Grid fb = mel_filterbank(cfg.stft.fft_size(sr), sr, cfg.n_mels);
  FeatureMatrix fm = assemble_features(apply_log_mel(mag, fb), cfg.use_deltas, cfg.delta_window);
  fm.frame_hop_s = cfg.stft.hop_ms / 1000.0;
  return fm;
}

std::vector<unsigned char> encode_feature_cache(const FeatureMatrix& features) {
  const auto rows = static_cast<std::uint32_t>(features.values.rows());
  const auto cols = static_cast<std::uint32_t>(features.values.cols());
  std::vector<unsigned char> out{'S', 'E', 'R', 'F'};
  out.reserve(16 + 4ull * rows * cols);
  put_u32(out, kFeatureCacheVersion);
  put_u32(out, rows);
  put_u32(out, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) put_u32(out, std::bit_cast<std::uint32_t>(features.values(r, c)));
  }
  return out;
}

FeatureMatrix decode_feature_cache(std::span<const unsigned char> bytes, const std::string& label) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "SERF", 4) != 0) {
    throw DataError("not a feature cache file: " + label);
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kFeatureCacheVersion) {
    throw DataError("unsupported feature cache version " + std::to_string(version) + ": " + label);
  }
  const std::uint32_t rows = get_u32(bytes.data() + 8);
  const std::uint32_t cols = get_u32(bytes.data() + 12);
  if (bytes.size() != 16 + 4ull * rows * cols) throw DataError("truncated feature cache: " + label);
  FeatureMatrix fm;
  fm.values.resize(rows, cols);
  const unsigned char* p = bytes.data() + 16;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c, p += 4) fm.values(r, c) = std::bit_cast<float>(get_u32(p));
  }
  return fm;
}

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features) {
  const auto bytes = encode_feature_cache(features);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureMatrix read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature cache " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_cache(bytes, path.string());
}

}  // namespace ser::dsp
