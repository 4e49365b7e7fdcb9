#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "ser/dsp/spectral.hpp"

namespace ser::dsp {

using FeatureValues = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-utterance time x feature grid. Columns are [mel | delta | delta-delta]
// when deltas are included.
struct FeatureMatrix {
  FeatureValues values;
  double frame_hop_s = 0.010;

  int frames() const { return static_cast<int>(values.rows()); }
  int dims() const { return static_cast<int>(values.cols()); }
};

struct FeatureConfig {
  StftConfig stft;
  int n_mels = 40;
  bool use_deltas = true;
  int delta_window = 2;

  int dims() const { return use_deltas ? 3 * n_mels : n_mels; }
};

// Per-dimension z-score statistics, estimated on a training portion only.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Concatenates [log_mel | delta | delta-delta] (or log_mel alone) without normalization.
FeatureMatrix assemble_features(const Grid& log_mel, bool use_deltas, int delta_window = 2);

// As above, then z-normalizes with caller-supplied statistics. A zero
// standard deviation leaves that dimension centered but unscaled.
FeatureMatrix assemble_features(const Grid& log_mel, bool use_deltas, const NormStats& stats,
                                int delta_window = 2);

// Population mean and standard deviation over every frame of every matrix.
NormStats compute_norm_stats(std::span<const FeatureMatrix* const> matrices);
NormStats compute_norm_stats(std::span<const FeatureMatrix> matrices);

void normalize_in_place(FeatureMatrix& features, const NormStats& stats);

// Full frontend: STFT -> log-Mel -> optional deltas (unnormalized).
FeatureMatrix featurize(const AudioSignal& signal, const FeatureConfig& cfg);

// "SERF" cache: magic, u32 version, u32 rows, u32 cols, row-major f32, all little-endian.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

std::vector<unsigned char> encode_feature_cache(const FeatureMatrix& features);
FeatureMatrix decode_feature_cache(std::span<const unsigned char> bytes, const std::string& label);
void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix read_feature_cache(const std::filesystem::path& path);

}  // namespace ser::dsp
