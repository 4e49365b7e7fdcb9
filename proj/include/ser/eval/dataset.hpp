#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ser/corpus/manifest.hpp"
#include "ser/dsp/features.hpp"
#include "ser/net/model.hpp"
#include "ser/segmenter.hpp"
#include "ser/train/sample.hpp"

namespace ser::eval {

// A label-mapped manifest with raw (unnormalized) features per record.
struct LabeledCorpus {
  corpus::CorpusManifest manifest;
  std::vector<std::string> classes;
  std::vector<int> emotion;  // class index per record
  std::vector<int> gender;   // 0 male, 1 female
  std::vector<dsp::FeatureMatrix> features;
  int sample_rate_hz = 0;
};

struct FeaturizeStats {
  int computed = 0;
  int cached = 0;
};

// Reads (or computes and stores) the feature cache entry for one record.
// The entry is reused when it is newer than the audio and has the expected
// width.
dsp::FeatureMatrix featurize_cached(const corpus::CorpusManifest& manifest, const corpus::UtteranceRecord& rec,
                                    const dsp::FeatureConfig& cfg, const std::optional<std::filesystem::path>& cache_dir,
                                    int* sample_rate_hz = nullptr, bool* was_cached = nullptr);

// `manifest` must already be mapped onto `classes`. All records must share
// one sample rate.
LabeledCorpus load_labeled_corpus(const corpus::CorpusManifest& manifest, const std::vector<std::string>& classes,
                                  const dsp::FeatureConfig& cfg,
                                  const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                                  FeaturizeStats* stats = nullptr);

// Normalized, chopped view of a subset of records.
struct SegmentSet {
  std::vector<seg::SubSegment> subs;
  std::vector<train::Sample> samples;  // parallel to subs
  std::vector<std::vector<std::size_t>> segment_subs;
  std::vector<int> segment_emotion;
  std::vector<int> segment_gender;
  std::vector<std::size_t> segment_record;  // record index in the corpus

  std::size_t n_segments() const { return segment_subs.size(); }
};

dsp::NormStats norm_stats_for(const LabeledCorpus& corpus, std::span<const std::size_t> records);

// `emotion_override`, when nonempty, replaces the per-record class indices.
SegmentSet build_segments(const LabeledCorpus& corpus, std::span<const std::size_t> records,
                          const dsp::NormStats& stats, const seg::ChopConfig& chop,
                          std::span<const int> emotion_override = {});

// Records whose speaker is in `speakers`, in manifest order.
std::vector<std::size_t> records_of_speakers(const LabeledCorpus& corpus, const std::vector<std::string>& speakers);

struct Posteriors {
  net::Mat<float> emotion;  // samples x classes
  net::Mat<float> gender;   // samples x 2, empty without a gender head
};

// Softmax outputs in eval mode, computed in batches.
Posteriors predict(net::Model<float>& model, std::span<const train::Sample> samples, int batch_size = 64);

}  // namespace ser::eval
